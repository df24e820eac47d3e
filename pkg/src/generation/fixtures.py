"""
固定样例
Werner 态（带给定分解）与 d-可计算态
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from src.config import ToleranceConfig, resolve_tolerances
from src.errors import NotOrthogonal, OutOfClass, ParamConstraintViolated
from src.generation.random_states import make_rng
from src.invariants.class_g import detect_class_g
from src.states.bipartite import (
    DensityMatrix,
    EigenEnsemble,
    LocalUnitaryPair,
    apply_local_to_ensemble,
    eigen_decompose,
    supplied_ensemble,
    validate_density,
)

logger = logging.getLogger(__name__)

SQRT_HALF = 1 / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class Fixture:
    """样例态及其分解"""

    rho: DensityMatrix
    ensemble: EigenEnsemble
    W: Optional[LocalUnitaryPair] = None
    meta: dict = field(default_factory=dict)


# ==================== Werner ====================


def singlet_coeff() -> np.ndarray:
    """|Ψ−⟩ = (|01⟩ − |10⟩)/√2 的系数矩阵"""
    return np.array([[0, SQRT_HALF], [-SQRT_HALF, 0]], dtype=complex)


def werner_ensemble_mats() -> np.ndarray:
    """ξ₀ = |00⟩，ξ₁ = |11⟩，ξ₂ = (|01⟩+|10⟩)/√2，ξ₃ = |Ψ−⟩"""
    return np.stack(
        [
            np.array([[1, 0], [0, 0]], dtype=complex),
            np.array([[0, 0], [0, 1]], dtype=complex),
            np.array([[0, SQRT_HALF], [SQRT_HALF, 0]], dtype=complex),
            singlet_coeff(),
        ]
    )


def werner_matrix(p: float) -> np.ndarray:
    """(1−p) I/4 + p |Ψ−⟩⟨Ψ−|"""
    psi = singlet_coeff().reshape(-1)
    return (1 - p) * np.eye(4) / 4 + p * np.outer(psi, psi.conj())


def werner_fixture(p: float, tols: Optional[ToleranceConfig] = None) -> Fixture:
    """
    Werner 态，附带按 ξ₀..ξ₃ 排列的分解

    μ = ((1−p)/4, (1−p)/4, (1−p)/4, (3p+1)/4)；该分解不按 μ 降序，
    前三个权重简并，因此只能作为调用方分解使用。
    """
    tols = resolve_tolerances(tols)
    if not 0 <= p <= 1:
        raise ParamConstraintViolated(f"Werner 参数 p={p} 不在 [0, 1]")
    rho = validate_density(werner_matrix(p), 2, tols)
    mus = np.array([(1 - p) / 4] * 3 + [(3 * p + 1) / 4])
    mats = werner_ensemble_mats()
    keep = mus > 0
    ensemble = supplied_ensemble(rho, mus[keep], mats[keep], tols)
    return Fixture(rho=rho, ensemble=ensemble, meta={"fixture": "werner", "p": p})


# ==================== d-可计算态 ====================


def swap_blocks() -> np.ndarray:
    """T = ((0, I₂), (I₂, 0))"""
    T = np.zeros((4, 4), dtype=complex)
    T[:2, 2:] = np.eye(2)
    T[2:, :2] = np.eye(2)
    return T


def block_matrix(a1: complex, b1: complex, d1: complex) -> np.ndarray:
    """M = ((a₁, b₁), (b̄₁, d₁))"""
    return np.array([[a1, b1], [np.conj(b1), d1]], dtype=complex)


def d_computable_coeff(a1: complex, b1: complex, d1: complex) -> np.ndarray:
    """A = ((0, M), (M, 0))"""
    M = block_matrix(a1, b1, d1)
    A = np.zeros((4, 4), dtype=complex)
    A[:2, 2:] = M
    A[2:, :2] = M
    return A


def generalized_concurrence(a1: complex, b1: complex, d1: complex) -> float:
    """d = 4(a₁d₁ − |b₁|²)"""
    return float(4 * (np.real(a1) * np.real(d1) - abs(b1) ** 2))


def _check_params(params: Tuple[complex, complex, complex], tol: float, name: str) -> None:
    a1, b1, d1 = params
    if abs(np.imag(a1)) > tol or abs(np.imag(d1)) > tol:
        raise ParamConstraintViolated(f"{name}: a₁, d₁ 必须为实数")
    a1, d1 = np.real(a1), np.real(d1)
    if a1 < -tol or d1 < -tol:
        raise ParamConstraintViolated(f"{name}: 要求 a₁, d₁ ≥ 0")
    if a1 * d1 < abs(b1) ** 2 - tol:
        raise ParamConstraintViolated(f"{name}: 要求 a₁d₁ ≥ |b₁|²")
    norm = 2 * (a1 ** 2 + 2 * abs(b1) ** 2 + d1 ** 2)
    if abs(norm - 1) > tol:
        raise ParamConstraintViolated(f"{name}: 系数平方和 {norm:.6f} ≠ 1")


def rank_one_params(vec: np.ndarray) -> Tuple[complex, complex, complex]:
    """M = |m⟩⟨m|/√2 对应的 (a₁, b₁, d₁)，满足归一化且 d = 0"""
    m = np.asarray(vec, dtype=complex)
    m = m / np.linalg.norm(m)
    M = np.outer(m, m.conj()) * SQRT_HALF
    return M[0, 0].real, M[0, 1], M[1, 1].real


def d_computable_fixture(
    first: Tuple[complex, complex, complex],
    second: Tuple[complex, complex, complex],
    mu: float,
    tols: Optional[ToleranceConfig] = None,
) -> Fixture:
    """
    ρ = μ|ψ⟩⟨ψ| + (1−μ)|ψ'⟩⟨ψ'|，W = T⊗I₄

    Args:
        first: ψ 的 (a₁, b₁, d₁)
        second: ψ' 的 (a₁, b₁, d₁)
        mu: ψ 的权重，0 < μ < 1

    Raises:
        ParamConstraintViolated: 参数约束不满足，或 WρW* 不能通过投影对检测
        NotOrthogonal: ⟨ψ'|ψ⟩ ≠ 0
    """
    tols = resolve_tolerances(tols)
    _check_params(first, tols.tol, "ψ")
    _check_params(second, tols.tol, "ψ'")
    if not 0 < mu < 1:
        raise ParamConstraintViolated(f"μ={mu} 必须在 (0, 1) 内")

    A, A2 = d_computable_coeff(*first), d_computable_coeff(*second)
    overlap = np.vdot(A2, A)
    if abs(overlap) > tols.tol:
        raise NotOrthogonal(f"⟨ψ'|ψ⟩ = {overlap:.3e}")

    psi, psi2 = A.reshape(-1), A2.reshape(-1)
    mat = mu * np.outer(psi, psi.conj()) + (1 - mu) * np.outer(psi2, psi2.conj())
    rho = validate_density(mat, 4, tols)
    W = LocalUnitaryPair(U=swap_blocks(), V=np.eye(4, dtype=complex))

    if abs(mu - 0.5) <= tols.gap:
        ensemble = supplied_ensemble(rho, [mu, 1 - mu], [A, A2], tols)
    else:
        ensemble = eigen_decompose(rho, tols=tols)
    try:
        detect_class_g(apply_local_to_ensemble(ensemble, W), tols)
    except OutOfClass as e:
        raise ParamConstraintViolated(f"WρW* 不在 G 类: {e}") from e

    d = (generalized_concurrence(*first), generalized_concurrence(*second))
    logger.info(f"d-可计算样例: μ={mu}, d={d}")
    return Fixture(
        rho=rho,
        ensemble=ensemble,
        W=W,
        meta={"fixture": "dcomp", "mu": mu, "d": d},
    )


def random_d_computable_fixture(
    mu: float, seed=None, tols: Optional[ToleranceConfig] = None
) -> Fixture:
    """随机 |m⟩ 给出的正交秩一对"""
    rng = make_rng(seed)
    m = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    m_perp = np.array([-np.conj(m[1]), np.conj(m[0])])
    return d_computable_fixture(rank_one_params(m), rank_one_params(m_perp), mu, tols)


def w_frame_pair(W: LocalUnitaryPair, X: np.ndarray) -> LocalUnitaryPair:
    """
    在 W 共轭后的坐标里作用 (X, X) 对应的原坐标局部幺正

    (W_U* X W_U, W_V* X W_V)：作用后 WρW* 仍保持投影对形式。
    """
    return LocalUnitaryPair(U=W.U.conj().T @ X @ W.U, V=W.V.conj().T @ X @ W.V)
