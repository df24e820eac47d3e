"""
多体态的分阶段判定
把多体密度矩阵按二分视作二体态，逐个二分调用二体判定器，
再对部分迹得到的约化态继续二分判定
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config import ToleranceConfig, get_settings, resolve_tolerances
from src.data_models import (
    StageReport,
    StagedOutcome,
    StagedVerdictReport,
    Stage,
    StateClass,
    Verdict,
)
from src.errors import BadCut, BadDimension, DimensionMismatch, LUEquivalenceError, UnequalCut
from src.invariants.class_f import DiffReport
from src.states.bipartite import DensityMatrix, check_density
from src.verification.equivalence_verifier import EquivalenceVerdict, EquivalenceVerifier

logger = logging.getLogger(__name__)

STAGED_CAVEAT = "结论只对所列二分阶段成立：各阶段等价是多体局部幺正等价的必要条件，不断言充分性"


def subsystem_name(index: int) -> str:
    """0 → A，1 → B，…；超过 26 个子系统时用 S27 之类"""
    return chr(ord("A") + index) if index < 26 else f"S{index + 1}"


@dataclass(frozen=True, eq=False)
class MultipartiteState:
    """Πd_i × Πd_i 密度矩阵，子系统按 dims 顺序做张量积"""

    dims: Tuple[int, ...]
    mat: np.ndarray

    @property
    def parties(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))


def validate_multipartite(
    mat: np.ndarray, dims: Sequence[int], tols: Optional[ToleranceConfig] = None
) -> MultipartiteState:
    """
    校验并构造多体态

    Raises:
        BadDimension: dims 为空、含非正维数或与矩阵形状不符
        NotHermitian / TraceNotOne / NotPSD: 不是密度矩阵
    """
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise BadDimension(f"子系统维数非法: {dims}")
    mat = check_density(mat, int(np.prod(dims)), tols)
    return MultipartiteState(dims=dims, mat=mat)


@dataclass(frozen=True)
class Bipartition:
    """子系统下标的二分 left | right（0 起）"""

    left: Tuple[int, ...]
    right: Tuple[int, ...]

    @classmethod
    def of(cls, left: Sequence[int], parties: int) -> "Bipartition":
        """由左侧下标集合和子系统个数构造，右侧取补集"""
        left = tuple(sorted(set(int(i) for i in left)))
        right = tuple(i for i in range(parties) if i not in left)
        return cls(left=left, right=right)

    def label(self) -> str:
        return "".join(map(subsystem_name, self.left)) + "|" + "".join(map(subsystem_name, self.right))


def _check_cut(cut: Bipartition, parties: int) -> None:
    left, right = set(cut.left), set(cut.right)
    if not left or not right:
        raise BadCut(f"二分两侧都必须非空: {cut}")
    if left & right:
        raise BadCut(f"二分两侧相交: {sorted(left & right)}")
    if left | right != set(range(parties)):
        raise BadCut(f"二分未覆盖全部 {parties} 个子系统: {cut}")
    if len(cut.left) != len(left) or len(cut.right) != len(right):
        raise BadCut(f"二分含重复下标: {cut}")


@lru_cache(maxsize=128)
def _cut_permutation(parties: int, left: Tuple[int, ...], right: Tuple[int, ...]) -> Tuple[int, ...]:
    """视图中子系统顺序：左侧升序，再右侧升序"""
    return tuple(sorted(left)) + tuple(sorted(right))


@dataclass(frozen=True, eq=False)
class BipartiteView:
    """多体态在某个二分下的二体视图"""

    n_left: int
    n_right: int
    mat: np.ndarray
    dims: Tuple[int, ...]
    perm: Tuple[int, ...]

    @property
    def unequal_cut(self) -> bool:
        return self.n_left != self.n_right

    @property
    def rho(self) -> DensityMatrix:
        """
        可交给二体判定器的密度矩阵

        Raises:
            UnequalCut: 两侧维数不等
        """
        if self.unequal_cut:
            raise UnequalCut(f"二分两侧维数 {self.n_left} ≠ {self.n_right}")
        return DensityMatrix(n=self.n_left, mat=self.mat)


def bipartition_view(s: MultipartiteState, cut: Bipartition) -> BipartiteView:
    """
    按二分重排下标得到二体视图

    两侧维数不等时仍返回视图，unequal_cut 为真。

    Raises:
        BadCut: 二分非法
    """
    m = s.parties
    _check_cut(cut, m)
    perm = _cut_permutation(m, cut.left, cut.right)
    n_left = int(np.prod([s.dims[i] for i in cut.left]))
    n_right = int(np.prod([s.dims[i] for i in cut.right]))

    tensor = s.mat.reshape(s.dims + s.dims)
    axes = list(perm) + [m + i for i in perm]
    mat = tensor.transpose(axes).reshape(n_left * n_right, n_left * n_right)
    if n_left != n_right:
        logger.debug(f"二分 {cut.label()} 两侧维数 {n_left}×{n_right} 不等")
    return BipartiteView(n_left=n_left, n_right=n_right, mat=mat, dims=s.dims, perm=perm)


def restore_from_view(view: BipartiteView) -> MultipartiteState:
    """bipartition_view 的逆：把视图矩阵还原到原子系统顺序"""
    m = len(view.dims)
    permuted_dims = tuple(view.dims[i] for i in view.perm)
    inverse = list(np.argsort(view.perm))
    tensor = view.mat.reshape(permuted_dims + permuted_dims)
    axes = inverse + [m + i for i in inverse]
    size = int(np.prod(view.dims))
    return MultipartiteState(dims=view.dims, mat=tensor.transpose(axes).reshape(size, size))


def reduce_trace(s: MultipartiteState, traced: Sequence[int]) -> MultipartiteState:
    """
    对 traced 中的子系统求部分迹

    Raises:
        BadCut: 下标越界、重复，或要求迹掉全部子系统
    """
    traced = [int(i) for i in traced]
    if len(set(traced)) != len(traced) or any(i < 0 or i >= s.parties for i in traced):
        raise BadCut(f"部分迹下标非法: {traced}")
    if len(traced) >= s.parties:
        raise BadCut("不能迹掉全部子系统")

    dims = list(s.dims)
    tensor = s.mat.reshape(tuple(dims) + tuple(dims))
    for i in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=i, axis2=len(dims) + i)
        dims.pop(i)
    size = int(np.prod(dims))
    return MultipartiteState(dims=tuple(dims), mat=tensor.reshape(size, size))


def apply_local_product(s: MultipartiteState, unitaries: Sequence[np.ndarray]) -> MultipartiteState:
    """(U_1⊗…⊗U_m) ρ (U_1⊗…⊗U_m)*"""
    if len(unitaries) != s.parties:
        raise BadDimension(f"需要 {s.parties} 个局部幺正，实际 {len(unitaries)} 个")
    K = np.array([[1.0 + 0j]])
    for d, U in zip(s.dims, unitaries):
        U = np.asarray(U, dtype=complex)
        if U.shape != (d, d):
            raise BadDimension(f"局部幺正形状 {U.shape} 与维数 {d} 不符")
        K = np.kron(K, U)
    mat = K @ s.mat @ K.conj().T
    return MultipartiteState(dims=s.dims, mat=(mat + mat.conj().T) / 2)


# ==================== 分阶段判定 ====================


@dataclass(frozen=True)
class StagePlan:
    """一个判定阶段：先迹掉 traced（原下标），再在剩余子系统上按 cut 二分"""

    label: str
    traced: Tuple[int, ...]
    cut: Bipartition


def default_cuts(parties: int) -> List[Bipartition]:
    """单个子系统对其余子系统：A|BC, B|AC, C|AB, …"""
    if parties < 2:
        raise BadCut("至少需要两个子系统")
    if parties == 2:
        return [Bipartition((0,), (1,))]
    return [Bipartition.of((i,), parties) for i in range(parties)]


def plan_stages(parties: int, cuts: Sequence[Bipartition]) -> List[StagePlan]:
    """
    展开判定阶段

    每个二分本身是一个阶段；右侧含两个以上子系统时迹掉左侧，
    在约化态上继续做 "首个子系统 | 其余" 的二分，直到右侧只剩一个子系统。
    """
    plans: Dict[str, StagePlan] = {}
    for cut in cuts:
        _check_cut(cut, parties)
        plans.setdefault(cut.label(), StagePlan(cut.label(), (), cut))

    for cut in cuts:
        traced = tuple(cut.left)
        remaining = tuple(cut.right)
        while len(remaining) >= 2:
            inner = Bipartition((remaining[0],), remaining[1:])
            label = "Tr_" + "".join(map(subsystem_name, sorted(traced))) + ":" + inner.label()
            plans.setdefault(label, StagePlan(label, tuple(sorted(traced)), inner))
            traced = traced + (remaining[0],)
            remaining = remaining[1:]
    return list(plans.values())


def _reindex(cut: Bipartition, traced: Tuple[int, ...], parties: int) -> Bipartition:
    """原下标的二分 → 约化态中的下标"""
    kept = [i for i in range(parties) if i not in traced]
    pos = {orig: k for k, orig in enumerate(kept)}
    return Bipartition(tuple(pos[i] for i in cut.left), tuple(pos[i] for i in cut.right))


@dataclass
class StagedVerdict:
    """分阶段判定结果，stages 与阶段计划同序"""

    overall: StagedOutcome
    stages: List[Tuple[str, EquivalenceVerdict]] = field(default_factory=list)
    caveat: str = STAGED_CAVEAT

    def to_report(self) -> StagedVerdictReport:
        return StagedVerdictReport(
            overall=self.overall,
            caveat=self.caveat,
            stages=[StageReport(label=label, report=v.to_report()) for label, v in self.stages],
        )


def _stage_out_of_class(reason: str, message: str) -> EquivalenceVerdict:
    return EquivalenceVerdict(
        verdict=Verdict.OUT_OF_CLASS,
        state_class=StateClass.AUTO,
        diff=DiffReport(False, Stage.CLASS, reason, message),
        reason=reason,
        message=message,
    )


def _overall(verdicts: Sequence[Verdict]) -> StagedOutcome:
    if any(v is Verdict.INEQUIVALENT for v in verdicts):
        return StagedOutcome.INEQUIVALENT
    if verdicts and all(v is Verdict.EQUIVALENT for v in verdicts):
        return StagedOutcome.EQUIVALENT_PER_STAGES
    return StagedOutcome.INCONCLUSIVE


def staged_equivalence(
    sA: MultipartiteState,
    sB: MultipartiteState,
    cuts: Optional[Sequence[Bipartition]] = None,
    tols: Optional[ToleranceConfig] = None,
    jobs: Optional[int] = None,
) -> StagedVerdict:
    """
    多体态的分阶段局部幺正判定

    每个阶段独立判定（自动选择 F/G 类），某阶段不在类中时仍继续其余阶段。

    Args:
        sA, sB: 两个多体态
        cuts: 有序二分列表，缺省为 default_cuts
        tols: 容差配置
        jobs: 并行线程数，缺省取套件配置

    Raises:
        DimensionMismatch: 两个态的 dims 不同
        BadCut: 二分非法
    """
    if sA.dims != sB.dims:
        raise DimensionMismatch(f"子系统维数不同: {sA.dims} vs {sB.dims}")
    tols = resolve_tolerances(tols)
    cuts = list(cuts) if cuts is not None else default_cuts(sA.parties)
    plans = plan_stages(sA.parties, cuts)
    verifier = EquivalenceVerifier(tols)
    reduced_cache: Dict[Tuple[int, ...], Tuple[MultipartiteState, MultipartiteState]] = {}
    for plan in plans:
        if plan.traced not in reduced_cache:
            reduced_cache[plan.traced] = (
                reduce_trace(sA, plan.traced) if plan.traced else sA,
                reduce_trace(sB, plan.traced) if plan.traced else sB,
            )

    def run(plan: StagePlan):
        ra, rb = reduced_cache[plan.traced]
        cut = _reindex(plan.cut, plan.traced, sA.parties)
        view_a, view_b = bipartition_view(ra, cut), bipartition_view(rb, cut)
        try:
            return verifier.decide(view_a.rho, view_b.rho, StateClass.AUTO)
        except UnequalCut as e:
            return _stage_out_of_class("unequal_cut", str(e))
        except LUEquivalenceError as e:
            return _stage_out_of_class(type(e).__name__, str(e))

    workers = max(1, min(jobs or get_settings().suite.jobs, len(plans)))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        verdicts = list(executor.map(run, plans))

    for plan, verdict in zip(plans, verdicts):
        logger.info(f"阶段 {plan.label}: {verdict.verdict.value}")
    result = StagedVerdict(
        overall=_overall([v.verdict for v in verdicts]),
        stages=[(plan.label, v) for plan, v in zip(plans, verdicts)],
    )
    logger.info(f"分阶段判定结论: {result.overall.value}")
    return result
