"""
投影对的幺正构造
给定两对投影 (P, Q)、(P', Q')，在 V = (2P−1)(2Q−1) 的谱分解上逐块构造 U，
使 U P U* = P'，U Q U* = Q'
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from src.config import ToleranceConfig, resolve_tolerances
from src.errors import DimensionMismatch, ResidualTooLarge, SpectrumMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EigenCluster:
    """幺正矩阵的一个本征值簇及其正交基"""

    kind: str  # "+1"、"-1"、"upper"（Im > 0）、"lower"（Im < 0）
    angle: float
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def reflection(P: np.ndarray) -> np.ndarray:
    """S = 2P − 1"""
    return 2 * P - np.eye(P.shape[0])


def pair_unitary(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """V = (2P−1)(2Q−1)"""
    return reflection(P) @ reflection(Q)


def unitary_clusters(V: np.ndarray, cluster_tol: float) -> List[EigenCluster]:
    """
    用复 Schur 分解对幺正矩阵的本征值按角度聚类

    Returns:
        按 (+1, −1, 上半平面角度升序, 下半平面角度降序) 排列的簇
    """
    T, Z = linalg.schur(np.asarray(V, dtype=complex), output="complex")
    eigs = np.diag(T)
    angles = np.angle(eigs)

    kinds = []
    for lam, theta in zip(eigs, angles):
        if abs(lam - 1) <= cluster_tol:
            kinds.append("+1")
        elif abs(lam + 1) <= cluster_tol:
            kinds.append("-1")
        else:
            kinds.append("upper" if theta > 0 else "lower")

    clusters: List[EigenCluster] = []
    for kind in ("+1", "-1"):
        idx = [k for k, t in enumerate(kinds) if t == kind]
        if idx:
            clusters.append(EigenCluster(kind, 0.0 if kind == "+1" else np.pi, Z[:, idx]))

    for kind in ("upper", "lower"):
        idx = sorted(
            (k for k, t in enumerate(kinds) if t == kind),
            key=lambda k: abs(angles[k]),
        )
        group: List[int] = []
        for k in idx:
            if group and abs(abs(angles[k]) - abs(angles[group[-1]])) > cluster_tol:
                clusters.append(_make_cluster(kind, angles, Z, group))
                group = []
            group.append(k)
        if group:
            clusters.append(_make_cluster(kind, angles, Z, group))
    return clusters


def _make_cluster(kind: str, angles: np.ndarray, Z: np.ndarray, group: List[int]) -> EigenCluster:
    return EigenCluster(kind, float(np.mean(angles[group])), Z[:, group])


def spectral_projector(clusters: List[EigenCluster], kind: str, n: int) -> np.ndarray:
    """±1 本征空间上的投影 E_±（空时为零矩阵）"""
    for c in clusters:
        if c.kind == kind:
            return c.basis @ c.basis.conj().T
    return np.zeros((n, n), dtype=complex)


def _match(a: List[EigenCluster], b: List[EigenCluster], cluster_tol: float) -> None:
    if len(a) != len(b):
        raise SpectrumMismatch(f"本征值簇个数不同: {len(a)} vs {len(b)}")
    for x, y in zip(a, b):
        if x.kind != y.kind or x.dim != y.dim or abs(x.angle - y.angle) > 10 * cluster_tol:
            raise SpectrumMismatch(
                f"本征值簇不匹配: {x.kind}@{x.angle:.6f}×{x.dim} vs {y.kind}@{y.angle:.6f}×{y.dim}"
            )


def _sign_split(S: np.ndarray, basis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """S 在 ±1 本征空间上的限制对角化，返回按 S 本征值升序的基"""
    M = basis.conj().T @ S @ basis
    w, Y = linalg.eigh((M + M.conj().T) / 2)
    return basis @ Y, w


def construct_unitary_pairform(
    P: np.ndarray,
    Q: np.ndarray,
    P2: np.ndarray,
    Q2: np.ndarray,
    tols: Optional[ToleranceConfig] = None,
) -> np.ndarray:
    """
    构造 U 使 U P U* = P2，U Q U* = Q2

    Im λ > 0 的本征空间用两组 Schur 基直接对齐；共轭本征空间取 U_λ̄ = S' U_λ S；
    ±1 本征空间内再按 S 的 ±1 子空间对齐。

    Raises:
        SpectrumMismatch: 两个 V 的谱或重数不同
        ResidualTooLarge: 构造出的 U 未通过验证
    """
    tols = resolve_tolerances(tols)
    P, Q, P2, Q2 = (np.asarray(M, dtype=complex) for M in (P, Q, P2, Q2))
    n = P.shape[0]
    if any(M.shape != (n, n) for M in (Q, P2, Q2)):
        raise DimensionMismatch("四个投影必须同维")

    S, S2 = reflection(P), reflection(P2)
    ca = unitary_clusters(S @ reflection(Q), tols.cluster_tol)
    cb = unitary_clusters(S2 @ reflection(Q2), tols.cluster_tol)
    _match(ca, cb, tols.cluster_tol)

    upper_dims = sorted(c.dim for c in ca if c.kind == "upper")
    lower_dims = sorted(c.dim for c in ca if c.kind == "lower")
    if upper_dims != lower_dims:
        raise SpectrumMismatch(f"共轭本征空间维数不成对: {upper_dims} vs {lower_dims}")

    U = np.zeros((n, n), dtype=complex)
    for x, y in zip(ca, cb):
        if x.kind == "upper":
            U_lam = y.basis @ x.basis.conj().T
            U += U_lam + S2 @ U_lam @ S
        elif x.kind in ("+1", "-1"):
            bx, wx = _sign_split(S, x.basis)
            by, wy = _sign_split(S2, y.basis)
            if np.count_nonzero(wx > 0) != np.count_nonzero(wy > 0):
                raise SpectrumMismatch(f"{x.kind} 本征空间内 S 的符号重数不同")
            U += by @ bx.conj().T

    U, _ = linalg.polar(U)
    residual = float(
        np.linalg.norm(U @ P @ U.conj().T - P2) + np.linalg.norm(U @ Q @ U.conj().T - Q2)
    )
    if residual > tols.tol:
        raise ResidualTooLarge(f"‖UPU*−P'‖ + ‖UQU*−Q'‖ = {residual:.3e}")

    logger.debug(f"投影对幺正构造完成: {len(ca)} 个本征值簇, 残差 {residual:.3e}")
    return U
