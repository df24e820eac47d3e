"""
性质测试流水线
随机往返、定向扰动、见证残差、跨类一致、扰动上界、投影对构造与 d-可计算样例套件
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.config import ToleranceConfig, get_settings
from src.data_models import Stage, SuiteSummaryRow, Verdict
from src.generation.fixtures import random_d_computable_fixture, w_frame_pair
from src.generation.random_states import (
    GeneratedState,
    haar_random_unitary,
    plant_local,
    random_class_f,
    random_class_g,
    random_local_pair,
    random_spectrum,
    rotate_out_of_support,
    shift_singular_values,
    shift_spectrum,
)
from src.invariants.class_g import compare_invariants_g, compute_invariants_g, detect_class_g
from src.invariants.projector_pairs import construct_unitary_pairform
from src.invariants.singular_frame import perturb_to_multiplicity_free, svd_frame
from src.states.bipartite import (
    EigenEnsemble,
    LocalUnitaryPair,
    apply_local,
    conjugation_residual,
)
from src.verification.equivalence_verifier import EquivalenceVerifier

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """套件运行配置"""

    cases: int = 20
    seed: int = 20240101
    jobs: int = 4
    inject_fault: bool = False
    suites: Optional[Sequence[str]] = None
    show_progress: bool = True


@dataclass
class CaseResult:
    """单个用例的结果，失败时 detail 给出阶段或数值"""

    ok: bool
    detail: str = ""


@dataclass
class SuiteResult:
    name: str
    results: List[CaseResult] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> int:
        return sum(r.ok for r in self.results)

    def to_row(self) -> SuiteSummaryRow:
        failures = [(k, r) for k, r in enumerate(self.results) if not r.ok]
        first = f"case {failures[0][0]}: {failures[0][1].detail}" if failures else None
        return SuiteSummaryRow(
            suite=self.name,
            cases=len(self.results),
            passed=self.passed,
            failed=len(self.results) - self.passed,
            first_failure=first,
            seconds=round(self.seconds, 3),
        )


def projector(cols: np.ndarray) -> np.ndarray:
    return cols @ cols.conj().T


class PropertySuitePipeline:
    """
    性质测试套件

    每个用例由 (seed, 套件序号, 用例序号) 派生独立的随机数生成器，
    结果与并行线程数无关。
    """

    def __init__(self, run_config: Optional[RunConfig] = None, tols: Optional[ToleranceConfig] = None):
        self.run_config = run_config or RunConfig()
        self.settings = get_settings()
        self.tols = tols or self.settings.tolerances
        self.verifier = EquivalenceVerifier(self.tols)
        self.suites: Dict[str, Callable[[np.random.Generator], CaseResult]] = {
            "round_trip_f": self.case_round_trip_f,
            "negative": self.case_negative,
            "witness_residual": self.case_witness_residual,
            "round_trip_g": self.case_round_trip_g,
            "cross_class": self.case_cross_class,
            "perturbation_bound": self.case_perturbation_bound,
            "projector_pair": self.case_projector_pair,
            "d_computable": self.case_d_computable,
        }
        logger.info(f"套件流水线初始化: cases={self.run_config.cases}, seed={self.run_config.seed}")

    def _rng(self, suite_index: int, case: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.run_config.seed, suite_index, case]))

    # ---------- F 类 ----------

    def _random_f(self, rng: np.random.Generator) -> GeneratedState:
        n = int(rng.choice([2, 3, 4]))
        rank = int(rng.choice([2, 3]))
        null_last = bool(rng.random() < 0.25)
        return random_class_f(n, rank, rng, tols=self.tols, null_last=null_last)

    def case_round_trip_f(self, rng: np.random.Generator) -> CaseResult:
        """ρ 与随机局部共轭后的 ρ：不变量一致，见证残差 ≤ τ_eq"""
        state = self._random_f(rng)
        planted = plant_local(state, random_local_pair(state.rho.n, rng))
        result = self.verifier.decide_f(
            state.rho, planted.rho, inject_fault=self.run_config.inject_fault
        )
        if result.verdict is not Verdict.EQUIVALENT:
            return CaseResult(False, result.stage.value if result.stage else result.verdict.value)
        if result.residual > self.tols.tol:
            return CaseResult(False, f"residual {result.residual:.3e}")
        return CaseResult(True)

    def case_negative(self, rng: np.random.Generator) -> CaseResult:
        """三类 1e-3 扰动轮换：谱、奇异值、|B| 元素，要求不等价且阶段正确"""
        kind = int(rng.integers(3))
        n = int(rng.choice([2, 3]))
        state = random_class_f(n, 2, rng, tols=self.tols)
        if kind == 0:
            other, expected = shift_spectrum(state.ensemble, 1e-3, 0, self.tols), Stage.SPECTRUM
        elif kind == 1:
            other, expected = shift_singular_values(state.ensemble, 1e-3, self.tols), Stage.C_VEC
        else:
            other = rotate_out_of_support(state.ensemble, 1e-3, 1, rng, self.tols)
            expected = Stage.B_ABS
        other = plant_local(other, random_local_pair(n, rng))

        result = self.verifier.decide_f(state.rho, other.rho)
        if result.verdict is not Verdict.INEQUIVALENT:
            return CaseResult(False, f"{expected.value}: verdict {result.verdict.value}")
        if result.stage is not expected:
            return CaseResult(False, f"{expected.value}: stage {result.stage.value}")
        return CaseResult(True)

    def case_witness_residual(self, rng: np.random.Generator) -> CaseResult:
        """见证本身幺正，且独立计算的共轭残差 ≤ τ_eq"""
        state = self._random_f(rng)
        planted = plant_local(state, random_local_pair(state.rho.n, rng))
        result = self.verifier.decide_f(state.rho, planted.rho)
        if result.witness is None:
            return CaseResult(False, f"verdict {result.verdict.value}")
        eye = np.eye(state.rho.n)
        for name, M in (("U", result.witness.U), ("V", result.witness.V)):
            err = np.linalg.norm(M @ M.conj().T - eye)
            if err > self.tols.tol:
                return CaseResult(False, f"{name} unitarity {err:.3e}")
        residual = conjugation_residual(state.rho, planted.rho, result.witness)
        return CaseResult(residual <= self.tols.tol, f"residual {residual:.3e}")

    # ---------- G 类 ----------

    def case_round_trip_g(self, rng: np.random.Generator) -> CaseResult:
        """(X, X) 共轭下 G 类不变量一致，判定器给出见证"""
        n = int(rng.choice([2, 3, 4]))
        state = random_class_g(n, rng, tols=self.tols)
        X = haar_random_unitary(n, rng)
        planted = plant_local(state, LocalUnitaryPair(U=X, V=X.copy()))

        inv_a = compute_invariants_g(detect_class_g(state.ensemble, self.tols), state.ensemble, self.tols)
        inv_b = compute_invariants_g(detect_class_g(planted.ensemble, self.tols), planted.ensemble, self.tols)
        diff = compare_invariants_g(inv_a, inv_b, self.tols.tol)
        if not diff.equal:
            return CaseResult(False, f"invariants: {diff.stage.value}")
        result = self.verifier.decide_g(state.rho, planted.rho, None, state.ensemble, planted.ensemble)
        return CaseResult(result.verdict is Verdict.EQUIVALENT, result.message or result.verdict.value)

    def case_cross_class(self, rng: np.random.Generator) -> CaseResult:
        """F ∩ G 中的秩二态：F、G 判定器在植入对与扰动对上结论一致"""
        state = random_class_g(2, rng, rank_p=1, rank_q=1, tols=self.tols)
        if rng.random() < 0.5:
            X = haar_random_unitary(2, rng)
            other = plant_local(state, LocalUnitaryPair(U=X, V=X.copy()))
        else:
            other = shift_spectrum(state.ensemble, 1e-3, 0, self.tols)

        f = self.verifier.decide_f(state.rho, other.rho, state.ensemble, other.ensemble)
        g = self.verifier.decide_g(state.rho, other.rho, None, state.ensemble, other.ensemble)
        if Verdict.OUT_OF_CLASS in (f.verdict, g.verdict):
            return CaseResult(False, f"out of class: F={f.reason}, G={g.reason}")
        return CaseResult(f.verdict is g.verdict, f"F={f.verdict.value}, G={g.verdict.value}")

    def case_perturbation_bound(self, rng: np.random.Generator) -> CaseResult:
        """A₀ 有重数时扰动：‖ρ−ρ'‖ ≤ 2n³ε，结果无重数且间隔 ≥ ε/(2g)"""
        n = int(rng.choice([2, 3, 4]))
        g = int(rng.integers(2, n + 1))
        eps = 1e-3
        levels = 1.0 - 0.15 * np.arange(n - g + 1)
        repeated = int(rng.integers(len(levels)))
        lam = np.sort(np.concatenate([levels, np.repeat(levels[repeated], g - 1)]))[::-1]
        lam = lam / np.linalg.norm(lam)

        psi, eta = haar_random_unitary(n, rng), haar_random_unitary(n, rng)
        A0 = (psi * lam) @ eta.conj().T
        rank = int(rng.choice([2, 3]))
        others = haar_random_unitary(n * n, rng)[:, : rank - 1]
        stacked = np.column_stack([A0.reshape(-1), others])
        q, r = np.linalg.qr(stacked)
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        mus = random_spectrum(rank, rng)
        ensemble = EigenEnsemble(n=n, mus=mus, coeff_mats=q.T.reshape(rank, n, n))

        bumped = perturb_to_multiplicity_free(ensemble, eps, tols=self.tols)
        distance = np.linalg.norm(ensemble.reconstruct() - bumped.reconstruct(), ord=2)
        if distance > 2 * n ** 3 * eps:
            return CaseResult(False, f"distance {distance:.3e} > {2 * n ** 3 * eps:.3e}")
        frame = svd_frame(bumped.coeff_mats[0], self.tols)
        min_gap = float((-np.diff(frame.lambdas)).min())
        if not frame.multiplicity_free or min_gap < eps / (2 * g):
            return CaseResult(False, f"gap {min_gap:.3e} < {eps / (2 * g):.3e}")
        return CaseResult(True)

    def case_projector_pair(self, rng: np.random.Generator) -> CaseResult:
        """X 共轭的投影对：构造的 U 满足 ‖UPU*−P'‖ + ‖UQU*−Q'‖ ≤ τ_eq"""
        n = int(rng.choice([2, 3, 4]))
        Z = haar_random_unitary(n, rng)
        if n == 4 and rng.random() < 0.25:
            # P∩Q, P∩Q⊥, P⊥∩Q, P⊥∩Q⊥ 各一维
            P, Q = projector(Z[:, [0, 1]]), projector(Z[:, [0, 2]])
        else:
            rank_p, rank_q = int(rng.integers(1, n)), int(rng.integers(1, n))
            P = projector(Z[:, :rank_p])
            Q = projector(haar_random_unitary(n, rng)[:, :rank_q])
        X = haar_random_unitary(n, rng)
        P2, Q2 = X @ P @ X.conj().T, X @ Q @ X.conj().T
        U = construct_unitary_pairform(P, Q, P2, Q2, self.tols)
        residual = np.linalg.norm(U @ P @ U.conj().T - P2) + np.linalg.norm(U @ Q @ U.conj().T - Q2)
        return CaseResult(residual <= self.tols.tol, f"residual {residual:.3e}")

    def case_d_computable(self, rng: np.random.Generator) -> CaseResult:
        """d-可计算样例：植入对等价，独立样例按 μ 区分"""
        mu = float(rng.uniform(0.55, 0.95))
        fixture = random_d_computable_fixture(mu, rng, self.tols)
        if rng.random() < 0.5:
            pair = w_frame_pair(fixture.W, haar_random_unitary(4, rng))
            rho_b = apply_local(fixture.rho, pair)
            expected = Verdict.EQUIVALENT
        else:
            mu_b = float(rng.uniform(0.55, 0.95))
            rho_b = random_d_computable_fixture(mu_b, rng, self.tols).rho
            expected = Verdict.EQUIVALENT if abs(mu - mu_b) <= self.tols.tol else Verdict.INEQUIVALENT
        result = self.verifier.decide_g(fixture.rho, rho_b, fixture.W)
        return CaseResult(result.verdict is expected, f"expected {expected.value}, got {result.verdict.value}")

    # ---------- 运行 ----------

    def _run_case(self, fn: Callable, suite_index: int, case: int) -> CaseResult:
        try:
            return fn(self._rng(suite_index, case))
        except Exception as e:
            logger.warning(f"⚠️ 用例异常: {type(e).__name__}: {e}")
            return CaseResult(False, f"{type(e).__name__}: {e}")

    def run_suite(self, name: str) -> SuiteResult:
        """运行单个套件"""
        fn = self.suites[name]
        suite_index = list(self.suites).index(name)
        cases = self.run_config.cases
        start = time.time()
        results: List[CaseResult] = []
        if cases > 0:
            with ThreadPoolExecutor(max_workers=max(1, self.run_config.jobs)) as executor:
                futures = [executor.submit(self._run_case, fn, suite_index, k) for k in range(cases)]
                for future in tqdm(
                    futures, desc=name, disable=not self.run_config.show_progress, leave=False
                ):
                    results.append(future.result())
        suite = SuiteResult(name=name, results=results, seconds=time.time() - start)
        status = "✅" if suite.passed == len(results) else "❌"
        logger.info(f"{status} {name}: {suite.passed}/{len(results)} 通过")
        return suite

    def run(self) -> List[SuiteResult]:
        """运行全部（或 RunConfig.suites 指定的）套件"""
        if self.run_config.cases <= 0:
            logger.info("用例数为 0，跳过全部套件")
            return []
        names = list(self.run_config.suites or self.suites)
        unknown = [n for n in names if n not in self.suites]
        if unknown:
            raise ValueError(f"未知套件: {unknown}")
        return [self.run_suite(name) for name in names]

    @staticmethod
    def summary_frame(results: Sequence[SuiteResult]) -> pd.DataFrame:
        columns = list(SuiteSummaryRow.model_fields)
        return pd.DataFrame([r.to_row().model_dump() for r in results], columns=columns)

    @staticmethod
    def summary_tsv(results: Sequence[SuiteResult]) -> str:
        """TSV 汇总表，用例数为 0 时只有表头"""
        return PropertySuitePipeline.summary_frame(results).to_csv(sep="\t", index=False)

    @staticmethod
    def all_passed(results: Sequence[SuiteResult]) -> bool:
        return all(r.passed == len(r.results) for r in results)
