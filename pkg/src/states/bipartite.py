"""
二体密度矩阵
密度矩阵校验、本征系综分解（系数矩阵 A_l）以及局部幺正作用
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.config import ToleranceConfig, resolve_tolerances
from src.errors import (
    BadDimension,
    EnsembleMismatch,
    NotHermitian,
    NotPSD,
    NotUnitary,
    TraceNotOne,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """n×n 二体系统上的密度矩阵，mat 为 n²×n² 复矩阵"""

    n: int
    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.n * self.n


@dataclass(frozen=True, eq=False)
class EigenEnsemble:
    """
    ρ = Σ_l μ_l |ξ_l⟩⟨ξ_l| 的系综表示

    coeff_mats[l] 是 ξ_l 按 (A_l)_{ij} = ⟨ij|ξ_l⟩ 重排得到的 n×n 矩阵。
    本征分解得到的系综按 μ 降序排列；supplied=True 表示调用方给出的分解，
    此时不要求正交也不要求排序。
    """

    n: int
    mus: np.ndarray
    coeff_mats: np.ndarray
    degenerate_groups: Tuple[Tuple[int, ...], ...] = ()
    supplied: bool = False

    @property
    def rank(self) -> int:
        return len(self.mus)

    @property
    def N(self) -> int:
        return len(self.mus) - 1

    @property
    def is_degenerate(self) -> bool:
        return len(self.degenerate_groups) > 0

    def reconstruct(self) -> np.ndarray:
        """由系综重构密度矩阵"""
        vecs = self.coeff_mats.reshape(self.rank, -1)
        return (vecs.T * self.mus) @ vecs.conj()

    def with_coeff_mats(self, coeff_mats: np.ndarray) -> "EigenEnsemble":
        return EigenEnsemble(
            n=self.n,
            mus=self.mus,
            coeff_mats=np.asarray(coeff_mats, dtype=complex),
            degenerate_groups=self.degenerate_groups,
            supplied=self.supplied,
        )


@dataclass(frozen=True, eq=False)
class LocalUnitaryPair:
    """局部幺正对 (U, V)，作用为 (U⊗V̄) ρ (U⊗V̄)*"""

    U: np.ndarray
    V: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    def kron(self) -> np.ndarray:
        return np.kron(self.U, self.V.conj())


# ==================== 重排工具 ====================


def vec_to_coeff(xi: np.ndarray, n: int) -> np.ndarray:
    """|ξ⟩ = Σ ξ_ij |ij⟩ → 系数矩阵 A，行优先 (下标 i·n + j)"""
    xi = np.asarray(xi, dtype=complex)
    if xi.shape != (n * n,):
        raise BadDimension(f"向量长度 {xi.shape} 与 n²={n * n} 不符")
    return xi.reshape(n, n)


def coeff_to_vec(A: np.ndarray) -> np.ndarray:
    """系数矩阵 A → |ξ⟩"""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise BadDimension(f"系数矩阵必须是方阵，实际为 {A.shape}")
    return A.reshape(-1)


def _check_square(mat: np.ndarray, size: int, what: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (size, size):
        raise BadDimension(f"{what} 形状应为 {size}×{size}，实际为 {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise BadDimension(f"{what} 含 NaN/Inf")
    return mat


# ==================== 校验 ====================


def validate_density(
    mat: np.ndarray, n: int, tols: Optional[ToleranceConfig] = None
) -> DensityMatrix:
    """
    校验并构造密度矩阵

    Args:
        mat: n²×n² 复矩阵
        n: 局部维数 (n ≥ 2)
        tols: 容差配置

    Returns:
        对称化后的 DensityMatrix
    """
    if n < 2:
        raise BadDimension(f"局部维数必须 ≥ 2，实际为 {n}")
    return DensityMatrix(n=n, mat=check_density(mat, n * n, tols))


def check_density(mat: np.ndarray, size: int, tols: Optional[ToleranceConfig] = None) -> np.ndarray:
    """厄米、单位迹、半正定检查，返回对称化后的矩阵"""
    tols = resolve_tolerances(tols)
    mat = _check_square(mat, size, "密度矩阵")

    asym = np.max(np.abs(mat - mat.conj().T))
    if asym > tols.herm_tol:
        raise NotHermitian(f"非厄米偏差 {asym:.3e} 超过 {tols.herm_tol:.1e}")
    mat = (mat + mat.conj().T) / 2

    trace = np.trace(mat).real
    if abs(trace - 1.0) > tols.herm_tol:
        raise TraceNotOne(f"迹为 {trace:.12f}")

    min_eig = linalg.eigvalsh(mat)[0]
    if min_eig < -tols.herm_tol:
        raise NotPSD(f"最小本征值 {min_eig:.3e}")
    return mat


def make_local_pair(
    U: np.ndarray, V: np.ndarray, tols: Optional[ToleranceConfig] = None
) -> LocalUnitaryPair:
    """校验幺正性后构造局部幺正对"""
    tols = resolve_tolerances(tols)
    U = np.asarray(U, dtype=complex)
    V = np.asarray(V, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape != V.shape:
        raise BadDimension(f"U {U.shape} 与 V {V.shape} 必须是同维方阵")
    eye = np.eye(U.shape[0])
    for name, M in (("U", U), ("V", V)):
        err = np.linalg.norm(M @ M.conj().T - eye)
        if err > tols.tol:
            raise NotUnitary(f"{name} 幺正残差 {err:.3e}")
    return LocalUnitaryPair(U=U, V=V)


# ==================== 谱分解 ====================


def _degenerate_groups(mus: np.ndarray, gap: float) -> Tuple[Tuple[int, ...], ...]:
    """按 μ 降序相邻间隔 ≤ gap 的标签组（返回原下标）"""
    order = [int(i) for i in np.argsort(-np.asarray(mus), kind="stable")]
    groups: List[Tuple[int, ...]] = []
    current = [order[0]]
    for prev, idx in zip(order, order[1:]):
        if abs(mus[prev] - mus[idx]) <= gap:
            current.append(idx)
        else:
            if len(current) > 1:
                groups.append(tuple(sorted(current)))
            current = [idx]
    if len(current) > 1:
        groups.append(tuple(sorted(current)))
    return tuple(groups)


def spectrum(rho: DensityMatrix) -> np.ndarray:
    """ρ 的全部本征值（降序），与分解方式无关"""
    return linalg.eigvalsh(rho.mat)[::-1]


def eigen_decompose(
    rho: DensityMatrix,
    rank_cut: Optional[float] = None,
    tols: Optional[ToleranceConfig] = None,
) -> EigenEnsemble:
    """
    本征分解 ρ = Σ μ_l |ξ_l⟩⟨ξ_l|

    低于 rank_cut 的本征值被丢弃；间隔 ≤ δ_gap 的本征值记入 degenerate_groups，
    这不是错误，由下游决定是否拒绝。
    """
    tols = resolve_tolerances(tols)
    cut = tols.rank_cut if rank_cut is None else rank_cut

    w, v = linalg.eigh(rho.mat)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    keep = w > cut
    mus = w[keep]
    vecs = v[:, keep]

    coeff_mats = np.stack([vecs[:, l].reshape(rho.n, rho.n) for l in range(len(mus))])
    groups = _degenerate_groups(mus, tols.gap)
    if groups:
        logger.info(f"检测到简并本征值组: {groups}")

    return EigenEnsemble(
        n=rho.n,
        mus=mus,
        coeff_mats=coeff_mats,
        degenerate_groups=groups,
    )


def supplied_ensemble(
    rho: DensityMatrix,
    mus: Sequence[float],
    coeff_mats: Sequence[np.ndarray],
    tols: Optional[ToleranceConfig] = None,
) -> EigenEnsemble:
    """
    校验调用方给出的分解（如 Werner 例子中的分解）

    要求 μ_l > 0、每个 A_l 归一、Σ μ_l vec(A_l)vec(A_l)* 重构 ρ。
    """
    tols = resolve_tolerances(tols)
    mus = np.asarray(mus, dtype=float)
    mats = np.asarray(coeff_mats, dtype=complex)
    if mats.ndim != 3 or mats.shape[1:] != (rho.n, rho.n) or len(mats) != len(mus):
        raise BadDimension(f"系综形状 {mats.shape} 与 μ 个数 {len(mus)} / n={rho.n} 不符")
    if np.any(mus <= 0):
        raise EnsembleMismatch("系综权重必须为正")
    norms = np.einsum("lij,lij->l", mats, mats.conj()).real
    if np.max(np.abs(norms - 1.0)) > tols.tol:
        raise EnsembleMismatch(f"系数矩阵未归一: {norms}")

    ensemble = EigenEnsemble(
        n=rho.n,
        mus=mus,
        coeff_mats=mats,
        degenerate_groups=_degenerate_groups(mus, tols.gap),
        supplied=True,
    )
    residual = np.linalg.norm(ensemble.reconstruct() - rho.mat)
    if residual > tols.tol:
        raise EnsembleMismatch(f"系综重构残差 {residual:.3e}")
    return ensemble


def density_from_ensemble(
    n: int,
    mus: Sequence[float],
    coeff_mats: Sequence[np.ndarray],
    tols: Optional[ToleranceConfig] = None,
) -> DensityMatrix:
    """由 (μ_l, A_l) 组装密度矩阵"""
    mats = np.asarray(coeff_mats, dtype=complex)
    vecs = mats.reshape(len(mats), -1)
    mat = (vecs.T * np.asarray(mus, dtype=float)) @ vecs.conj()
    return validate_density(mat, n, tols)


# ==================== 局部幺正作用 ====================


def apply_local(rho: DensityMatrix, pair: LocalUnitaryPair) -> DensityMatrix:
    """(U⊗V̄) ρ (U⊗V̄)*，等价于 A_l ↦ U A_l V*"""
    if pair.U.shape != (rho.n, rho.n) or pair.V.shape != (rho.n, rho.n):
        raise BadDimension(f"局部幺正维数 {pair.U.shape} 与 n={rho.n} 不符")
    K = pair.kron()
    mat = K @ rho.mat @ K.conj().T
    return DensityMatrix(n=rho.n, mat=(mat + mat.conj().T) / 2)


def apply_local_to_ensemble(
    ensemble: EigenEnsemble, pair: LocalUnitaryPair
) -> EigenEnsemble:
    """系综上的局部作用 A_l ↦ U A_l V*"""
    if pair.U.shape != (ensemble.n, ensemble.n):
        raise BadDimension(f"局部幺正维数 {pair.U.shape} 与 n={ensemble.n} 不符")
    mats = pair.U[None, :, :] @ ensemble.coeff_mats @ pair.V.conj().T[None, :, :]
    return ensemble.with_coeff_mats(mats)


def compose_pairs(first: LocalUnitaryPair, second: LocalUnitaryPair) -> LocalUnitaryPair:
    """先作用 first 再作用 second 的合成 (U₂U₁, V₂V₁)"""
    return LocalUnitaryPair(U=second.U @ first.U, V=second.V @ first.V)


def conjugation_residual(
    rho_a: DensityMatrix, rho_b: DensityMatrix, pair: LocalUnitaryPair
) -> float:
    """‖(U⊗V̄)ρ_A(U⊗V̄)* − ρ_B‖_F"""
    return float(np.linalg.norm(apply_local(rho_a, pair).mat - rho_b.mat))
