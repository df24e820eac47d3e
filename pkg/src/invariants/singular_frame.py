"""
奇异值标架
A₀ 的 SVD 标架、无重数判定、B_l 矩阵、本征矢相位锚定以及向无重数态的扰动
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy import linalg

from src.config import ToleranceConfig, resolve_tolerances
from src.errors import BadDimension, EpsTooLarge
from src.states.bipartite import EigenEnsemble

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SingularFrame:
    """
    A₀ = Σ_i λ_i |ψ_i⟩⟨η_i|

    psi / eta 的第 i 列为 ψ_i / η_i；null_last 表示 λ_n 为零，
    此时 η_n 的相位与 ψ_n 无关。
    """

    lambdas: np.ndarray
    psi: np.ndarray
    eta: np.ndarray
    multiplicity_free: bool
    null_last: bool
    warnings: Tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return len(self.lambdas)

    def reconstruct(self) -> np.ndarray:
        return (self.psi * self.lambdas) @ self.eta.conj().T


@dataclass(frozen=True, eq=False)
class BStack:
    """(B_l)_{ij} = ⟨ψ_i|A_l η_j⟩，l = 1..N；diag 为 B₀ = diag(λ) 的对角线"""

    mats: np.ndarray
    diag: np.ndarray
    null_last: bool

    @property
    def n(self) -> int:
        return len(self.diag)

    @property
    def N(self) -> int:
        return len(self.mats)


def _pivot_phase(vec: np.ndarray) -> complex:
    """模最大元素的相位（并列时取下标最小者）"""
    mags = np.abs(vec)
    top = mags.max()
    if top == 0:
        return 1.0 + 0j
    k = int(np.flatnonzero(mags >= top * (1 - 1e-9))[0])
    return vec[k] / mags[k]


def svd_frame(A0: np.ndarray, tols: Optional[ToleranceConfig] = None) -> SingularFrame:
    """
    计算 A₀ 的奇异值标架

    规范固定：λ_i > 0 时使 ψ_i 模最大元素为正实数，η_i 乘同一相位；
    λ_i = 0 时 ψ_i 与 η_i 各自按同一规则固定。规范只为可复现，不变量与其无关。
    """
    tols = resolve_tolerances(tols)
    A0 = np.asarray(A0, dtype=complex)
    if A0.ndim != 2 or A0.shape[0] != A0.shape[1]:
        raise BadDimension(f"A₀ 必须是方阵，实际为 {A0.shape}")

    U, s, Vh = linalg.svd(A0)
    psi = U.copy()
    eta = Vh.conj().T.copy()

    for i in range(len(s)):
        ph = _pivot_phase(psi[:, i])
        psi[:, i] *= np.conj(ph)
        if s[i] > tols.zero_tol:
            eta[:, i] *= np.conj(ph)
        else:
            eta[:, i] *= np.conj(_pivot_phase(eta[:, i]))

    gaps = -np.diff(s)
    multiplicity_free = bool(len(gaps) == 0 or gaps.min() > tols.sv_gap)
    warnings: List[str] = []
    if multiplicity_free and len(gaps) and gaps.min() <= 10 * tols.sv_gap:
        msg = f"奇异值间隔 {gaps.min():.3e} 接近 δ_sv={tols.sv_gap:.1e}，不变量可能病态"
        logger.warning(f"⚠️ {msg}")
        warnings.append(msg)

    return SingularFrame(
        lambdas=s,
        psi=psi,
        eta=eta,
        multiplicity_free=multiplicity_free,
        null_last=bool(s[-1] <= tols.zero_tol),
        warnings=tuple(warnings),
    )


def is_multiplicity_free(frame: SingularFrame, gap: Optional[float] = None) -> bool:
    """min_i (λ_i − λ_{i+1}) > gap"""
    gap = resolve_tolerances().sv_gap if gap is None else gap
    gaps = -np.diff(frame.lambdas)
    return bool(len(gaps) == 0 or gaps.min() > gap)


def b_stack(frame: SingularFrame, ensemble: EigenEnsemble) -> BStack:
    """B_l = ψ* A_l η，l = 1..N"""
    if ensemble.n != frame.n:
        raise BadDimension(f"标架维数 {frame.n} 与系综维数 {ensemble.n} 不符")
    others = ensemble.coeff_mats[1:]
    mats = frame.psi.conj().T[None, :, :] @ others @ frame.eta[None, :, :]
    return BStack(
        mats=mats.reshape(len(others), frame.n, frame.n),
        diag=frame.lambdas.copy(),
        null_last=frame.null_last,
    )


def gauge_indices(n: int, null_last: bool) -> List[int]:
    """ψ_i 与 η_i 相位绑定的下标（0 起）"""
    return list(range(n - 1)) if null_last else list(range(n))


def anchor_label_phases(
    frame: SingularFrame,
    ensemble: EigenEnsemble,
    tols: Optional[ToleranceConfig] = None,
) -> Tuple[EigenEnsemble, Tuple[int, ...]]:
    """
    固定数值本征分解给出的 ξ_l 任意相位

    规则（只依赖 |B| 的非零模式与已锚定标签，因此对局部幺正协变）：
    1. 第一个模 > τ_zero 的规范不变对角元 b^{(l)}_ii 取为正实数；
    2. 否则在 B 元图中找 ξ_l 净出现一次的圈，使圈乘积为正实数。
       图的节点为行相位 u_i 与列相位（λ_n = 0 时 v_n 单列一个节点），
       每个非零 b^{(m)}_ij 是一条边；例如 λ_n = 0 时 b^{(l)}_in b^{(l)}_ni / b^{(l)}_nn。

    Returns:
        (重新定相的系综, 无法锚定的标签)
    """
    tols = resolve_tolerances(tols)
    stack = b_stack(frame, ensemble)
    idx = gauge_indices(frame.n, frame.null_last)
    phases: Dict[int, complex] = {}

    for l in range(stack.N):
        for i in idx:
            z = stack.mats[l, i, i]
            if abs(z) > tols.zero_tol:
                phases[l] = np.conj(z) / abs(z)
                break

    changed = True
    while changed:
        changed = False
        for l in range(stack.N):
            if l in phases:
                continue
            found = _cycle_phase(stack, l, phases, tols.zero_tol)
            if found is not None:
                phases[l] = found
                changed = True

    unanchored = tuple(l + 1 for l in range(stack.N) if l not in phases)
    if unanchored:
        logger.warning(f"⚠️ 标签 {unanchored} 没有规范不变的相位锚点")

    mats = ensemble.coeff_mats.copy()
    for l, ph in phases.items():
        mats[l + 1] = mats[l + 1] * ph
    return ensemble.with_coeff_mats(mats), unanchored


def _entry_graph(
    stack: BStack, label: int, phases: Dict[int, complex], zero_tol: float
) -> nx.MultiGraph:
    """已锚定标签的边 count=0（取锚定后的值），待锚定标签的边 count=1"""
    n = stack.n
    G = nx.MultiGraph()
    G.add_nodes_from(("r", i) for i in range(n))
    if stack.null_last:
        G.add_node(("c", n - 1))

    for m in [*sorted(phases), label]:
        weight, count = (phases[m], 0) if m in phases else (1.0 + 0j, 1)
        for i, j in zip(*np.nonzero(np.abs(stack.mats[m]) > zero_tol)):
            z = stack.mats[m, i, j] * weight
            row = ("r", int(i))
            col = ("c", n - 1) if (stack.null_last and j == n - 1) else ("r", int(j))
            G.add_edge(row, col, z=z / abs(z), count=count, row=row)
    return G


def _cycle_phase(
    stack: BStack,
    label: int,
    phases: Dict[int, complex],
    zero_tol: float,
) -> Optional[complex]:
    """
    沿 BFS 树给每个节点记 (相位, ξ_label 次数)，非树边闭合的圈乘积为 φ^k；
    取第一个 k = ±1 的圈
    """
    G = _entry_graph(stack, label, phases, zero_tol)
    potential: Dict[tuple, Tuple[complex, int]] = {}
    tree = set()

    for comp in sorted(nx.connected_components(G), key=min):
        root = min(comp)
        potential[root] = (1.0 + 0j, 0)
        for parent, child in nx.bfs_edges(G, root, sort_neighbors=sorted):
            key = min(G[parent][child])
            edge = G[parent][child][key]
            phase, cnt = potential[parent]
            if edge["row"] == parent:
                potential[child] = (np.conj(edge["z"]) * phase, cnt + edge["count"])
            else:
                potential[child] = (edge["z"] * phase, cnt - edge["count"])
            tree.add((frozenset((parent, child)), key))

    for first, second, key, edge in G.edges(keys=True, data=True):
        if (frozenset((first, second)), key) in tree:
            continue
        row = edge["row"]
        col = second if first == row else first
        (p_row, c_row), (p_col, c_col) = potential[row], potential[col]
        k = edge["count"] + c_row - c_col
        if abs(k) != 1:
            continue
        w = edge["z"] * np.conj(p_row) * p_col
        return np.conj(w) / abs(w) if k == 1 else w / abs(w)
    return None


def _shift_group(values: np.ndarray, eps: float) -> np.ndarray:
    """组内按 eps·(k/g − 1/2) 对称展开；会出现负值时改为向上展开"""
    g = len(values)
    ks = np.arange(g - 1, -1, -1, dtype=float)
    if values[-1] - eps / 2 < 0:
        return values + eps * ks / g
    return values + eps * (ks / g - 0.5)


def perturb_to_multiplicity_free(
    ensemble: EigenEnsemble,
    eps: float,
    gap: Optional[float] = None,
    tols: Optional[ToleranceConfig] = None,
) -> EigenEnsemble:
    """
    把 A₀ 的奇异值扰开，得到无重数的 A'₀

    |λ_i − λ'_i| ≤ eps，A'₀ = Σ λ'_i ψ_i η_i* 归一化后替换 ξ_0；
    返回的系综一般不再正交，标记为 supplied。
    """
    tols = resolve_tolerances(tols)
    gap = tols.sv_gap if gap is None else gap
    if eps <= 0:
        raise ValueError(f"eps 必须为正，实际为 {eps}")

    frame = svd_frame(ensemble.coeff_mats[0], tols)
    lam = frame.lambdas
    new_lam = lam.copy()

    start = 0
    for stop in range(1, len(lam) + 1):
        if stop == len(lam) or lam[stop - 1] - lam[stop] > gap:
            if stop - start > 1:
                new_lam[start:stop] = _shift_group(lam[start:stop], eps)
            start = stop

    if np.any(np.diff(new_lam) >= 0) or new_lam[-1] < 0:
        raise EpsTooLarge(f"eps={eps} 会改变奇异值顺序: {lam} → {new_lam}")
    min_gap = (-np.diff(new_lam)).min() if len(new_lam) > 1 else np.inf
    if min_gap <= gap:
        logger.warning(f"⚠️ 扰动后最小间隔 {min_gap:.3e} 仍不超过 δ_sv")

    A0_new = (frame.psi * new_lam) @ frame.eta.conj().T
    A0_new = A0_new / np.linalg.norm(A0_new)
    mats = ensemble.coeff_mats.copy()
    mats[0] = A0_new

    logger.info(f"奇异值扰动: {np.round(lam, 6)} → {np.round(new_lam, 6)}")
    return EigenEnsemble(
        n=ensemble.n,
        mus=ensemble.mus,
        coeff_mats=mats,
        degenerate_groups=ensemble.degenerate_groups,
        supplied=True,
    )
