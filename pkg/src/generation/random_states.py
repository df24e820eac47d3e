"""
随机实例生成
Haar 随机幺正、F/G 类随机态、植入的局部幺正对以及用于反例的定向扰动
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg

from src.config import ToleranceConfig, resolve_tolerances
from src.data_models import RandomSpecModel, StateClass
from src.errors import EpsTooLarge
from src.invariants.singular_frame import (
    is_multiplicity_free,
    perturb_to_multiplicity_free,
    svd_frame,
)
from src.states.bipartite import (
    DensityMatrix,
    EigenEnsemble,
    LocalUnitaryPair,
    apply_local,
    apply_local_to_ensemble,
    density_from_ensemble,
    eigen_decompose,
    supplied_ensemble,
)

logger = logging.getLogger(__name__)

RngLike = Union[int, np.random.Generator, None]

# 随机 F 类态 A₀ 奇异值间隔的下限
F_CLASS_SV_GAP = 1e-4


def make_rng(seed: RngLike = None) -> np.random.Generator:
    """种子或生成器 → 生成器"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_random_unitary(n: int, seed: RngLike = None) -> np.ndarray:
    """
    Haar 随机幺正矩阵

    复高斯矩阵做 QR 分解，再用 R 对角元的相位修正 Q 的各列。
    """
    rng = make_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_local_pair(n: int, seed: RngLike = None) -> LocalUnitaryPair:
    rng = make_rng(seed)
    return LocalUnitaryPair(U=haar_random_unitary(n, rng), V=haar_random_unitary(n, rng))


def random_spectrum(rank: int, seed: RngLike = None, min_gap: float = 1e-2) -> np.ndarray:
    """降序、两两间隔 ≥ min_gap、和为 1 的正权重"""
    rng = make_rng(seed)
    offsets = min_gap * np.arange(rank - 1, -1, -1, dtype=float)
    budget = 1.0 - offsets.sum()
    if budget <= 0:
        raise ValueError(f"rank={rank} 与 min_gap={min_gap} 不相容")
    weights = np.sort(rng.dirichlet(np.ones(rank)))[::-1] * budget
    return weights + offsets


def random_projector(n: int, rank: int, seed: RngLike = None) -> np.ndarray:
    """秩为 rank 的 Haar 随机投影"""
    U = haar_random_unitary(n, seed)
    return U[:, :rank] @ U[:, :rank].conj().T


def random_projector_pair(
    n: int,
    seed: RngLike = None,
    rank_p: Optional[int] = None,
    rank_q: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    随机投影对

    秩之和超过 n 时 P∩Q 或 P∩Q⊥ 非平凡，V = (2P−1)(2Q−1) 同时出现 ±1 与共轭复本征值。
    """
    rng = make_rng(seed)
    rank_p = int(rng.integers(1, n)) if rank_p is None else rank_p
    rank_q = int(rng.integers(1, n)) if rank_q is None else rank_q
    return random_projector(n, rank_p, rng), random_projector(n, rank_q, rng)


@dataclass(frozen=True, eq=False)
class GeneratedState:
    """生成的态；supplied 分解非空时态文件需要携带它"""

    rho: DensityMatrix
    ensemble: EigenEnsemble
    spec: Optional[RandomSpecModel] = None

    @property
    def carries_ensemble(self) -> bool:
        return self.ensemble.supplied


def _orthonormal_columns(first: np.ndarray, others: np.ndarray) -> np.ndarray:
    """以 first 为第一列做 QR 正交化，first 的相位保持不变"""
    stacked = np.column_stack([first, others])
    q, r = linalg.qr(stacked, mode="economic")
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_class_f(
    n: int,
    rank: int,
    seed: RngLike = None,
    min_gap: float = 1e-2,
    tols: Optional[ToleranceConfig] = None,
    max_attempts: int = 10,
    null_last: bool = False,
) -> GeneratedState:
    """
    随机 F 类态：μ 无简并、A₀ 无重数、系综正交

    A₀ 的奇异值间隔过小时先扰开，再把其余本征矢对新的 ξ₀ 正交化。
    null_last=True 时 A₀ 的最小奇异值为零（n = 2 时 ξ₀ 是积态）。
    """
    tols = resolve_tolerances(tols)
    rng = make_rng(seed)
    for attempt in range(max_attempts):
        mus = random_spectrum(rank, rng, min_gap)
        cols = haar_random_unitary(n * n, rng)[:, :rank]
        if null_last:
            lam = np.append(np.sort(rng.uniform(0.2, 1.0, n - 1))[::-1], 0.0)
            lam = lam / np.linalg.norm(lam)
            if not np.all(-np.diff(lam) > F_CLASS_SV_GAP):
                continue
            A0 = (haar_random_unitary(n, rng) * lam) @ haar_random_unitary(n, rng).conj().T
            cols = _orthonormal_columns(A0.reshape(-1), cols[:, 1:])
        mats = cols.T.reshape(rank, n, n)
        ensemble = EigenEnsemble(n=n, mus=mus, coeff_mats=mats)

        frame = svd_frame(mats[0], tols)
        if not is_multiplicity_free(frame, F_CLASS_SV_GAP):
            try:
                bumped = perturb_to_multiplicity_free(ensemble, 1e-2, gap=F_CLASS_SV_GAP, tols=tols)
            except EpsTooLarge:
                logger.debug(f"第 {attempt + 1} 次采样扰动失败，重新采样")
                continue
            xi0 = bumped.coeff_mats[0].reshape(-1)
            q = _orthonormal_columns(xi0, cols[:, 1:])
            mats = q.T.reshape(rank, n, n)
            ensemble = EigenEnsemble(n=n, mus=mus, coeff_mats=mats)

        rho = density_from_ensemble(n, mus, ensemble.coeff_mats, tols)
        return GeneratedState(rho=rho, ensemble=eigen_decompose(rho, tols=tols))
    raise RuntimeError(f"{max_attempts} 次采样均未得到 F 类态")


def random_class_g(
    n: int,
    seed: RngLike = None,
    rank_p: Optional[int] = None,
    rank_q: Optional[int] = None,
    p_range: Tuple[float, float] = (0.6, 0.95),
    min_gap: float = 1e-2,
    tols: Optional[ToleranceConfig] = None,
) -> GeneratedState:
    """
    随机 G 类态，携带调用方分解

    A₀ ∝ pP + (1−p)(1−P)，A₁ ∝ qQ + (1−q)(1−Q)；p, q 取内点时两者一般不正交，
    因此分解不是本征分解，随态一起保存。
    """
    tols = resolve_tolerances(tols)
    rng = make_rng(seed)
    P, Q = random_projector_pair(n, rng, rank_p, rank_q)
    p, q = rng.uniform(*p_range, size=2)
    eye = np.eye(n)
    A0 = p * P + (1 - p) * (eye - P)
    A1 = q * Q + (1 - q) * (eye - Q)
    mats = np.stack([A0 / np.linalg.norm(A0), A1 / np.linalg.norm(A1)])
    mus = random_spectrum(2, rng, min_gap)

    rho = density_from_ensemble(n, mus, mats, tols)
    return GeneratedState(rho=rho, ensemble=supplied_ensemble(rho, mus, mats, tols))


def generate_state(spec: RandomSpecModel, tols: Optional[ToleranceConfig] = None) -> GeneratedState:
    """按 RandomSpec 生成，相同种子给出相同实例"""
    rng = make_rng(spec.seed)
    state_class = spec.state_class
    if state_class in (StateClass.ANY, StateClass.AUTO):
        state_class = StateClass.G if rng.random() < 0.5 else StateClass.F
    if state_class is StateClass.G:
        state = random_class_g(spec.n, rng, min_gap=spec.min_gap, tols=tols)
    else:
        state = random_class_f(spec.n, spec.rank, rng, min_gap=spec.min_gap, tols=tols)
    return GeneratedState(rho=state.rho, ensemble=state.ensemble, spec=spec)


# ==================== 植入与扰动 ====================


def plant_local(
    state: GeneratedState, pair: LocalUnitaryPair
) -> GeneratedState:
    """对态与其分解同时作用局部幺正"""
    return GeneratedState(
        rho=apply_local(state.rho, pair),
        ensemble=apply_local_to_ensemble(state.ensemble, pair),
        spec=state.spec,
    )


def _rebuild(ensemble: EigenEnsemble, mus, mats, tols) -> GeneratedState:
    rho = density_from_ensemble(ensemble.n, mus, mats, tols)
    if ensemble.supplied:
        return GeneratedState(rho=rho, ensemble=supplied_ensemble(rho, mus, mats, tols))
    return GeneratedState(rho=rho, ensemble=eigen_decompose(rho, tols=tols))


def shift_spectrum(
    ensemble: EigenEnsemble,
    delta: float = 1e-3,
    label: int = 0,
    tols: Optional[ToleranceConfig] = None,
) -> GeneratedState:
    """μ_label 加 delta 后重新归一"""
    tols = resolve_tolerances(tols)
    mus = np.array(ensemble.mus, dtype=float)
    mus[label] += delta
    mus /= mus.sum()
    return _rebuild(ensemble, mus, ensemble.coeff_mats, tols)


def shift_singular_values(
    ensemble: EigenEnsemble,
    delta: float = 1e-3,
    tols: Optional[ToleranceConfig] = None,
) -> GeneratedState:
    """
    把 A₀ 的 λ_1 抬高 delta

    去掉新 A₀ 在其余 A_l 上的分量后归一，保持系综正交。
    """
    tols = resolve_tolerances(tols)
    frame = svd_frame(ensemble.coeff_mats[0], tols)
    A0 = ensemble.coeff_mats[0] + delta * np.outer(frame.psi[:, 0], frame.eta[:, 0].conj())
    for A in ensemble.coeff_mats[1:]:
        A0 = A0 - np.vdot(A, A0) * A
    A0 = A0 / np.linalg.norm(A0)
    mats = ensemble.coeff_mats.copy()
    mats[0] = A0
    return _rebuild(ensemble, ensemble.mus, mats, tols)


def rotate_out_of_support(
    ensemble: EigenEnsemble,
    angle: float = 1e-3,
    label: int = 1,
    seed: RngLike = None,
    tols: Optional[ToleranceConfig] = None,
) -> GeneratedState:
    """
    把 ξ_label 向支撑之外的随机方向转动 angle

    μ 与 A₀ 不变，|B_label| 的元素一般改变 O(angle)。
    """
    tols = resolve_tolerances(tols)
    rng = make_rng(seed)
    n = ensemble.n
    vecs = ensemble.coeff_mats.reshape(ensemble.rank, -1)
    mats = ensemble.coeff_mats.copy()
    c, s = np.cos(angle), np.sin(angle)
    if ensemble.rank < n * n:
        chi = rng.standard_normal(n * n) + 1j * rng.standard_normal(n * n)
        for v in vecs:
            chi = chi - np.vdot(v, chi) * v
        chi = chi / np.linalg.norm(chi)
        mats[label] = (c * vecs[label] + s * chi).reshape(n, n)
    else:
        # 满秩时与相邻标签互转
        other = label - 1 if label + 1 == ensemble.rank else label + 1
        mats[label] = (c * vecs[label] + s * vecs[other]).reshape(n, n)
        mats[other] = (c * vecs[other] - s * vecs[label]).reshape(n, n)
    return _rebuild(ensemble, ensemble.mus, mats, tols)
