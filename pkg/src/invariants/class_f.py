"""
F 类不变量
A₀ 无重数的态：|B_l|、奇异值向量 C、对角向量 D_l、Σ 上的 I 值，
以及由相位解构造见证幺正对
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from src.config import EnumerationConfig, ToleranceConfig, resolve_tolerances
from src.data_models import (
    InvariantSetFPayload,
    Stage,
    complex_pair,
    real_list,
    real_matrix,
)
from src.errors import DimensionMismatch, NotMultiplicityFree, ResidualTooLarge
from src.invariants.phases import PhaseAssignment
from src.invariants.sigma import SigmaDomain, SigmaTable, enumerate_sigma
from src.invariants.singular_frame import (
    BStack,
    SingularFrame,
    anchor_label_phases,
    b_stack,
    svd_frame,
)
from src.states.bipartite import EigenEnsemble, LocalUnitaryPair

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class InvariantSetF:
    """F 类完整不变量，附带计算所用的标架与系综（供见证构造）"""

    n: int
    spectrum: np.ndarray
    b_abs: np.ndarray
    c_vec: np.ndarray
    d_vecs: np.ndarray
    d_tail: Optional[np.ndarray]
    sigma: SigmaTable
    frame: SingularFrame
    stack: BStack
    ensemble: EigenEnsemble
    unanchored_labels: Tuple[int, ...] = ()
    warnings: Tuple[str, ...] = ()

    @property
    def rank(self) -> int:
        return len(self.spectrum)

    @property
    def i_values(self) -> np.ndarray:
        return self.sigma.values

    def to_payload(self) -> InvariantSetFPayload:
        return InvariantSetFPayload(
            n=self.n,
            rank=self.rank,
            spectrum=real_list(self.spectrum),
            b_abs=[real_matrix(m) for m in self.b_abs],
            c_vec=real_list(self.c_vec),
            d_vecs=[[complex_pair(z) for z in row] for row in self.d_vecs],
            d_tail=None if self.d_tail is None else [complex_pair(z) for z in self.d_tail],
            sigma_domain=self.sigma.domain.value,
            sigma=[
                [list(e.i_path), list(e.j_path), list(e.l_labels), list(e.m_labels)]
                for e in self.sigma.entries
            ],
            i_values=[complex_pair(z) for z in self.sigma.values],
            unanchored_labels=list(self.unanchored_labels),
            supplied_ensemble=self.ensemble.supplied,
            warnings=list(self.warnings),
        )


@dataclass
class DiffReport:
    """不变量比较结果：首个不同的阶段与位置"""

    equal: bool
    stage: Optional[Stage] = None
    location: Optional[str] = None
    detail: str = ""
    deviation: float = 0.0


def compute_invariants_f(
    ensemble: EigenEnsemble,
    domain: SigmaDomain = SigmaDomain.MATCHED,
    anchor: Optional[bool] = None,
    tols: Optional[ToleranceConfig] = None,
    limits: Optional[EnumerationConfig] = None,
    allow_large: bool = False,
) -> InvariantSetF:
    """
    计算 F 类不变量

    Args:
        ensemble: 系综（A₀ 需无重数）
        domain: Σ 取法
        anchor: 是否锚定本征矢相位，默认仅对本征分解得到的系综锚定
        tols: 容差配置
        limits: Σ 枚举上限
        allow_large: 放开枚举上限

    Returns:
        InvariantSetF
    """
    tols = resolve_tolerances(tols)
    frame = svd_frame(ensemble.coeff_mats[0], tols)
    if not frame.multiplicity_free:
        raise NotMultiplicityFree(f"A₀ 奇异值 {np.round(frame.lambdas, 8)} 有重数")

    unanchored: Tuple[int, ...] = ()
    if anchor is None:
        anchor = not ensemble.supplied
    if anchor and ensemble.N > 0:
        ensemble, unanchored = anchor_label_phases(frame, ensemble, tols)

    stack = b_stack(frame, ensemble)
    n = frame.n
    diag = np.arange(n - 1)
    d_vecs = stack.mats[:, diag, diag]
    d_tail = None if frame.null_last else stack.mats[:, n - 1, n - 1]
    sigma = enumerate_sigma(stack, domain, tols, limits, allow_large)

    warnings = list(frame.warnings)
    if sigma.borderline:
        warnings.append(f"Σ 中 {sigma.borderline} 个分母接近 τ_zero")
    if unanchored:
        warnings.append(f"标签 {list(unanchored)} 的相位无法锚定")

    logger.info(f"F 类不变量: n={n}, N={ensemble.N}, |Σ|={len(sigma)} ({domain.value})")
    return InvariantSetF(
        n=n,
        spectrum=np.asarray(ensemble.mus, dtype=float),
        b_abs=np.abs(stack.mats),
        c_vec=frame.lambdas.copy(),
        d_vecs=d_vecs,
        d_tail=d_tail,
        sigma=sigma,
        frame=frame,
        stack=stack,
        ensemble=ensemble,
        unanchored_labels=unanchored,
        warnings=tuple(warnings),
    )


def _first_over(diff: np.ndarray, limit) -> Optional[tuple]:
    bad = np.argwhere(diff > limit)
    return tuple(int(x) for x in bad[0]) if len(bad) else None


def compare_invariants_f(
    a: InvariantSetF, b: InvariantSetF, tol: Optional[float] = None
) -> DiffReport:
    """
    依次比较 秩与谱 → c_vec → |B_l| → Σ 定义域 → D_l → (n,n) 对角元 → I 值

    Returns:
        首个差异的 DiffReport；全部一致时 equal=True
    """
    tol = resolve_tolerances().tol if tol is None else tol
    if a.n != b.n:
        raise DimensionMismatch(f"局部维数不同: {a.n} vs {b.n}")

    if a.rank != b.rank:
        return DiffReport(False, Stage.SPECTRUM, "rank", f"秩 {a.rank} vs {b.rank}")
    diff = np.abs(a.spectrum - b.spectrum)
    hit = _first_over(diff, tol)
    if hit:
        return DiffReport(False, Stage.SPECTRUM, f"mu[{hit[0]}]", "系综权重不同", float(diff.max()))

    diff = np.abs(a.c_vec - b.c_vec)
    hit = _first_over(diff, tol)
    if hit:
        return DiffReport(False, Stage.C_VEC, f"lambda[{hit[0] + 1}]", "奇异值不同", float(diff.max()))

    diff = np.abs(a.b_abs - b.b_abs)
    hit = _first_over(diff, tol)
    if hit:
        l, i, j = hit
        return DiffReport(
            False, Stage.B_ABS, f"B_{l + 1}[{i + 1},{j + 1}]", "|B_l| 不同", float(diff.max())
        )

    if a.sigma.domain != b.sigma.domain or a.sigma.entries != b.sigma.entries:
        where = next(
            (k for k, (x, y) in enumerate(zip(a.sigma.entries, b.sigma.entries)) if x != y),
            min(len(a.sigma), len(b.sigma)),
        )
        return DiffReport(
            False,
            Stage.SIGMA_DOMAIN,
            f"sigma[{where}]",
            f"Σ 定义域不同 (|Σ|={len(a.sigma)} vs {len(b.sigma)})",
        )

    diff = np.abs(a.d_vecs - b.d_vecs)
    hit = _first_over(diff, tol)
    if hit:
        l, i = hit
        return DiffReport(False, Stage.D_VECS, f"D_{l + 1}[{i + 1}]", "D_l 不同", float(diff.max()))

    if (a.d_tail is None) != (b.d_tail is None):
        return DiffReport(False, Stage.D_TAIL, "lambda_n", "λ_n 一个为零一个非零")
    if a.d_tail is not None:
        diff = np.abs(a.d_tail - b.d_tail)
        hit = _first_over(diff, tol)
        if hit:
            return DiffReport(
                False, Stage.D_TAIL, f"B_{hit[0] + 1}[{a.n},{a.n}]", "(n,n) 对角元不同", float(diff.max())
            )

    va, vb = a.sigma.values, b.sigma.values
    if len(va):
        scale = np.maximum(1.0, np.maximum(np.abs(va), np.abs(vb)))
        diff = np.abs(va - vb)
        hit = _first_over(diff, tol * scale)
        if hit:
            e = a.sigma.entries[hit[0]]
            return DiffReport(
                False,
                Stage.I_VALUES,
                f"sigma[{hit[0]}]={e.i_path},{e.j_path},{e.l_labels},{e.m_labels}",
                "I 值不同",
                float((diff / scale).max()),
            )

    return DiffReport(True)


def with_flipped_i_value(inv: InvariantSetF, index: int = 0) -> InvariantSetF:
    """把第 index 个 I 值取反（套件自检用）"""
    values = inv.sigma.values.copy()
    if len(values):
        values[index % len(values)] *= -1
    return replace(inv, sigma=replace(inv.sigma, values=values))


def build_witness(
    frame_a: SingularFrame,
    frame_b: SingularFrame,
    phases: PhaseAssignment,
    ensemble_a: Optional[EigenEnsemble] = None,
    ensemble_b: Optional[EigenEnsemble] = None,
    tols: Optional[ToleranceConfig] = None,
) -> LocalUnitaryPair:
    """
    U = ψ' W₁ ψ*，V = η' W₂ η*，W₁ = diag(u)，W₂ = diag(u_1..u_{n−1}, v_n)

    给出两个系综时验证 U A_l V* = A'_l。

    Raises:
        ResidualTooLarge: 验证残差超过 τ_eq
    """
    tols = resolve_tolerances(tols)
    if frame_a.n != frame_b.n:
        raise DimensionMismatch(f"标架维数不同: {frame_a.n} vs {frame_b.n}")
    gap = float(np.max(np.abs(frame_a.lambdas - frame_b.lambdas)))
    if gap > tols.tol:
        raise ResidualTooLarge(f"两个标架的奇异值相差 {gap:.3e}")

    U = frame_b.psi @ np.diag(phases.u) @ frame_a.psi.conj().T
    V = frame_b.eta @ np.diag(phases.column_phases) @ frame_a.eta.conj().T

    residual = 0.0
    if ensemble_a is not None and ensemble_b is not None:
        mapped = U[None, :, :] @ ensemble_a.coeff_mats @ V.conj().T[None, :, :]
        residual = float(np.max(np.linalg.norm(mapped - ensemble_b.coeff_mats, axis=(1, 2))))
        if residual > tols.tol:
            raise ResidualTooLarge(f"U A_l V* − A'_l 残差 {residual:.3e}")

    return LocalUnitaryPair(U=U, V=V, meta={"coeff_residual": residual})
