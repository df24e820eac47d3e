"""
局部幺正等价判定器
分层判定：谱 → 类归属 → 不变量比较 → 见证构造 → 在 ρ 上验证见证
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.config import ToleranceConfig, get_settings
from src.data_models import (
    FirstDiff,
    Stage,
    StateClass,
    Verdict,
    VerdictReport,
    WitnessPayload,
    MatrixPayload,
    round_sig,
)
from src.errors import (
    DimensionMismatch,
    InconsistentPhases,
    NotMultiplicityFree,
    OutOfClass,
    ResidualTooLarge,
    SpectrumMismatch,
)
from src.invariants.class_f import (
    DiffReport,
    build_witness,
    compare_invariants_f,
    compute_invariants_f,
    with_flipped_i_value,
)
from src.invariants.class_g import compare_invariants_g, compute_invariants_g, detect_class_g
from src.invariants.phases import solve_phases
from src.invariants.projector_pairs import construct_unitary_pairform
from src.invariants.sigma import SigmaDomain
from src.states.bipartite import (
    DensityMatrix,
    EigenEnsemble,
    LocalUnitaryPair,
    apply_local,
    apply_local_to_ensemble,
    conjugation_residual,
    eigen_decompose,
    spectrum,
)

logger = logging.getLogger(__name__)

# 这些阶段的差异受本征矢相位影响
_PHASE_SENSITIVE = {Stage.D_VECS, Stage.D_TAIL, Stage.I_VALUES, Stage.PHASES, Stage.WITNESS}


@dataclass
class EquivalenceVerdict:
    """判定结论，Equivalent 时附带已验证的见证"""

    verdict: Verdict
    state_class: Optional[StateClass] = None
    diff: Optional[DiffReport] = None
    witness: Optional[LocalUnitaryPair] = None
    residual: Optional[float] = None
    reason: Optional[str] = None
    warnings: List[str] = field(default_factory=list)
    message: str = ""

    @property
    def stage(self) -> Optional[Stage]:
        return self.diff.stage if self.diff is not None else None

    def to_report(self) -> VerdictReport:
        first_diff = None
        if self.diff is not None and not self.diff.equal:
            first_diff = FirstDiff(
                stage=self.diff.stage,
                location=self.diff.location,
                detail=self.diff.detail,
                deviation=round_sig(self.diff.deviation),
            )
        witness = None
        if self.witness is not None:
            witness = WitnessPayload(
                U=MatrixPayload.from_array(self.witness.U),
                V=MatrixPayload.from_array(self.witness.V),
                residual=round_sig(self.residual or 0.0),
            )
        return VerdictReport(
            verdict=self.verdict,
            state_class=self.state_class,
            first_diff=first_diff,
            out_of_class_reason=self.reason,
            residual=None if self.residual is None else round_sig(self.residual),
            witness=witness,
            warnings=list(self.warnings),
            message=self.message,
        )


class EquivalenceVerifier:
    """
    局部幺正等价判定器

    判定层次：
    1. 谱比较 - ρ 的全部本征值，与分解无关，不同即不等价
    2. 类归属 - F 类要求 μ 无简并（或给出分解）且 A₀ 无重数；G 类要求投影对形式
    3. 不变量比较 - 定位首个差异阶段
    4. 见证构造与验证 - (U⊗V̄)ρ_A(U⊗V̄)* = ρ_B
    """

    def __init__(
        self,
        tols: Optional[ToleranceConfig] = None,
        domain: SigmaDomain = SigmaDomain.MATCHED,
        allow_large: bool = False,
    ):
        self.settings = get_settings()
        self.tols = tols or self.settings.tolerances
        self.domain = domain
        self.allow_large = allow_large

    # ---------- 公共步骤 ----------

    def _check_dims(self, rho_a: DensityMatrix, rho_b: DensityMatrix) -> None:
        if rho_a.n != rho_b.n:
            raise DimensionMismatch(f"局部维数不同: {rho_a.n} vs {rho_b.n}")

    def _spectrum_diff(self, rho_a: DensityMatrix, rho_b: DensityMatrix) -> Optional[DiffReport]:
        diff = np.abs(spectrum(rho_a) - spectrum(rho_b))
        if diff.max() > self.tols.tol:
            k = int(np.argmax(diff > self.tols.tol))
            return DiffReport(False, Stage.SPECTRUM, f"eig[{k}]", "ρ 的本征值不同", float(diff.max()))
        return None

    def _ensemble(
        self, rho: DensityMatrix, supplied: Optional[EigenEnsemble]
    ) -> EigenEnsemble:
        if supplied is not None:
            return supplied
        return eigen_decompose(rho, tols=self.tols)

    def _mismatch(
        self,
        diff: DiffReport,
        cls: StateClass,
        conditional: bool,
        warnings: List[str],
    ) -> EquivalenceVerdict:
        verdict = Verdict.CONDITIONAL if conditional else Verdict.INEQUIVALENT
        logger.info(f"判定 {verdict.value}: 阶段 {diff.stage.value} @ {diff.location}")
        return EquivalenceVerdict(
            verdict=verdict,
            state_class=cls,
            diff=diff,
            warnings=warnings,
            message=diff.detail,
        )

    def _out_of_class(self, cls: StateClass, reason: str, message: str) -> EquivalenceVerdict:
        logger.info(f"不属于 {cls.value.upper()} 类: {reason}")
        return EquivalenceVerdict(
            verdict=Verdict.OUT_OF_CLASS,
            state_class=cls,
            diff=DiffReport(False, Stage.CLASS, reason, message),
            reason=reason,
            message=message,
        )

    def _accept(
        self,
        rho_a: DensityMatrix,
        rho_b: DensityMatrix,
        pair: LocalUnitaryPair,
        cls: StateClass,
        conditional: bool,
        warnings: List[str],
    ) -> EquivalenceVerdict:
        residual = conjugation_residual(rho_a, rho_b, pair)
        if residual > self.tols.tol:
            diff = DiffReport(
                False, Stage.WITNESS, "rho", f"见证在 ρ 上的残差 {residual:.3e}", residual
            )
            return self._mismatch(diff, cls, conditional, warnings)
        logger.info(f"✅ {cls.value.upper()} 类判定等价，见证残差 {residual:.3e}")
        return EquivalenceVerdict(
            verdict=Verdict.EQUIVALENT,
            state_class=cls,
            diff=DiffReport(True),
            witness=pair,
            residual=residual,
            warnings=warnings,
        )

    # ---------- F 类 ----------

    def decide_f(
        self,
        rho_a: DensityMatrix,
        rho_b: DensityMatrix,
        ensemble_a: Optional[EigenEnsemble] = None,
        ensemble_b: Optional[EigenEnsemble] = None,
        inject_fault: bool = False,
    ) -> EquivalenceVerdict:
        """
        F 类判定

        Args:
            rho_a, rho_b: 两个密度矩阵
            ensemble_a, ensemble_b: 调用方给出的分解（可选）
            inject_fault: 比较前翻转一个 I 值（套件自检用）
        """
        self._check_dims(rho_a, rho_b)
        spectrum_diff = self._spectrum_diff(rho_a, rho_b)
        if spectrum_diff is not None:
            return self._mismatch(spectrum_diff, StateClass.F, False, [])

        ens_a = self._ensemble(rho_a, ensemble_a)
        ens_b = self._ensemble(rho_b, ensemble_b)
        supplied = ens_a.supplied or ens_b.supplied
        for ens in (ens_a, ens_b):
            if ens.is_degenerate and not ens.supplied:
                return self._out_of_class(
                    StateClass.F, "degenerate_spectrum", f"μ 简并组 {ens.degenerate_groups}"
                )

        try:
            inv_a = compute_invariants_f(
                ens_a, self.domain, tols=self.tols, allow_large=self.allow_large
            )
            inv_b = compute_invariants_f(
                ens_b, self.domain, tols=self.tols, allow_large=self.allow_large
            )
        except NotMultiplicityFree as e:
            return self._out_of_class(StateClass.F, "not_multiplicity_free", str(e))

        if inject_fault:
            inv_b = with_flipped_i_value(inv_b)

        warnings = sorted(set(inv_a.warnings) | set(inv_b.warnings))
        unanchored = bool(inv_a.unanchored_labels or inv_b.unanchored_labels)

        diff = compare_invariants_f(inv_a, inv_b, self.tols.tol)
        if not diff.equal:
            conditional = supplied or (unanchored and diff.stage in _PHASE_SENSITIVE)
            return self._mismatch(diff, StateClass.F, conditional, warnings)

        try:
            phases = solve_phases(inv_a.stack, inv_b.stack, self.tols)
        except InconsistentPhases as e:
            diff = DiffReport(False, Stage.PHASES, "cycle", str(e))
            return self._mismatch(diff, StateClass.F, supplied or unanchored, warnings)

        try:
            pair = build_witness(
                inv_a.frame, inv_b.frame, phases, inv_a.ensemble, inv_b.ensemble, self.tols
            )
        except ResidualTooLarge as e:
            diff = DiffReport(False, Stage.WITNESS, "coeff_mats", str(e))
            return self._mismatch(diff, StateClass.F, supplied or unanchored, warnings)

        return self._accept(rho_a, rho_b, pair, StateClass.F, supplied or unanchored, warnings)

    # ---------- G 类 ----------

    def decide_g(
        self,
        rho_a: DensityMatrix,
        rho_b: DensityMatrix,
        W: Optional[LocalUnitaryPair] = None,
        ensemble_a: Optional[EigenEnsemble] = None,
        ensemble_b: Optional[EigenEnsemble] = None,
    ) -> EquivalenceVerdict:
        """
        G 类判定（给出 W 时先做 W 共轭，即 G_W 类）

        W 共轭后的见证为 (U, U)，回到原态的见证为 (W_U* U W_U, W_V* U W_V)。
        """
        self._check_dims(rho_a, rho_b)
        spectrum_diff = self._spectrum_diff(rho_a, rho_b)
        if spectrum_diff is not None:
            return self._mismatch(spectrum_diff, StateClass.G, False, [])

        work_a, work_b = rho_a, rho_b
        if W is not None:
            work_a, work_b = apply_local(rho_a, W), apply_local(rho_b, W)
            ensemble_a = None if ensemble_a is None else apply_local_to_ensemble(ensemble_a, W)
            ensemble_b = None if ensemble_b is None else apply_local_to_ensemble(ensemble_b, W)

        ens_a = self._ensemble(work_a, ensemble_a)
        ens_b = self._ensemble(work_b, ensemble_b)
        supplied = ens_a.supplied or ens_b.supplied
        try:
            form_a = detect_class_g(ens_a, self.tols)
            form_b = detect_class_g(ens_b, self.tols)
        except OutOfClass as e:
            return self._out_of_class(StateClass.G, e.reason, str(e))
        for ens in (ens_a, ens_b):
            if ens.is_degenerate and not ens.supplied:
                return self._out_of_class(
                    StateClass.G, "degenerate_spectrum", f"μ 简并组 {ens.degenerate_groups}"
                )

        inv_a = compute_invariants_g(form_a, ens_a, self.tols)
        inv_b = compute_invariants_g(form_b, ens_b, self.tols)
        diff = compare_invariants_g(inv_a, inv_b, self.tols.tol)
        if not diff.equal:
            return self._mismatch(diff, StateClass.G, supplied, [])

        try:
            U = construct_unitary_pairform(form_a.P, form_a.Q, form_b.P, form_b.Q, self.tols)
        except (SpectrumMismatch, ResidualTooLarge) as e:
            diff = DiffReport(False, Stage.WITNESS, "projector_pair", str(e))
            return self._mismatch(diff, StateClass.G, supplied, [])

        if W is None:
            pair = LocalUnitaryPair(U=U, V=U.copy())
        else:
            pair = LocalUnitaryPair(
                U=W.U.conj().T @ U @ W.U,
                V=W.V.conj().T @ U @ W.V,
                meta={"conjugated_by_w": True},
            )
        return self._accept(rho_a, rho_b, pair, StateClass.G, supplied, [])

    # ---------- 自动 ----------

    def decide(
        self,
        rho_a: DensityMatrix,
        rho_b: DensityMatrix,
        state_class: StateClass = StateClass.AUTO,
        W: Optional[LocalUnitaryPair] = None,
        ensembles: Tuple[Optional[EigenEnsemble], Optional[EigenEnsemble]] = (None, None),
    ) -> EquivalenceVerdict:
        """按类判定；AUTO 先试 F 类，不属于 F 类时再试 G 类"""
        ens_a, ens_b = ensembles
        if state_class is StateClass.F:
            return self.decide_f(rho_a, rho_b, ens_a, ens_b)
        if state_class is StateClass.G:
            return self.decide_g(rho_a, rho_b, W, ens_a, ens_b)

        first = self.decide_f(rho_a, rho_b, ens_a, ens_b)
        if first.verdict is not Verdict.OUT_OF_CLASS:
            return first
        second = self.decide_g(rho_a, rho_b, W, ens_a, ens_b)
        if second.verdict is Verdict.OUT_OF_CLASS:
            second.reason = f"F: {first.reason}; G: {second.reason}"
            second.state_class = StateClass.AUTO
        return second


def decide_equivalence_f(
    rho_a: DensityMatrix,
    rho_b: DensityMatrix,
    ensemble_a: Optional[EigenEnsemble] = None,
    ensemble_b: Optional[EigenEnsemble] = None,
    tols: Optional[ToleranceConfig] = None,
    domain: SigmaDomain = SigmaDomain.MATCHED,
    allow_large: bool = False,
) -> EquivalenceVerdict:
    """F 类判定"""
    return EquivalenceVerifier(tols, domain, allow_large).decide_f(
        rho_a, rho_b, ensemble_a, ensemble_b
    )


def decide_equivalence_g(
    rho_a: DensityMatrix,
    rho_b: DensityMatrix,
    W: Optional[LocalUnitaryPair] = None,
    ensemble_a: Optional[EigenEnsemble] = None,
    ensemble_b: Optional[EigenEnsemble] = None,
    tols: Optional[ToleranceConfig] = None,
) -> EquivalenceVerdict:
    """G 类判定"""
    return EquivalenceVerifier(tols).decide_g(rho_a, rho_b, W, ensemble_a, ensemble_b)


def decide_equivalence(
    rho_a: DensityMatrix,
    rho_b: DensityMatrix,
    state_class: StateClass = StateClass.AUTO,
    W: Optional[LocalUnitaryPair] = None,
    tols: Optional[ToleranceConfig] = None,
    allow_large: bool = False,
) -> EquivalenceVerdict:
    """按类判定，AUTO 依次尝试 F、G"""
    return EquivalenceVerifier(tols, allow_large=allow_large).decide(rho_a, rho_b, state_class, W)
