"""
G 类不变量
秩为二、系数矩阵为投影对形式 A = s(pP + (1−p)(1−P)) 的态：
投影对检测、迹不变量与比较
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from src.config import ToleranceConfig, resolve_tolerances
from src.data_models import InvariantSetGPayload, Stage, real_list, round_sig
from src.errors import AmbiguousForm, DimensionMismatch, NotProjectorForm, NotRankTwo
from src.invariants.class_f import DiffReport
from src.invariants.projector_pairs import (
    pair_unitary,
    reflection,
    spectral_projector,
    unitary_clusters,
)
from src.states.bipartite import EigenEnsemble

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProjectorPairForm:
    """
    A₀ = e^{iθ₀} s₀ (pP + (1−p)(1−P))，A₁ = e^{iθ₁} s₁ (qQ + (1−q)(1−Q))

    p, q ≥ 1/2；p = 1 表示 A₀ 本身是缩放的投影。
    """

    n: int
    p: float
    q: float
    P: np.ndarray
    Q: np.ndarray
    scales: Tuple[float, float]
    phases: Tuple[complex, complex]
    mu: np.ndarray

    @property
    def rank_p(self) -> int:
        return int(round(np.trace(self.P).real))

    @property
    def rank_q(self) -> int:
        return int(round(np.trace(self.Q).real))

    def hermitian_mats(self) -> Tuple[np.ndarray, np.ndarray]:
        """去掉相位后的 A₀、A₁"""
        eye = np.eye(self.n)
        A0 = self.scales[0] * (self.p * self.P + (1 - self.p) * (eye - self.P))
        A1 = self.scales[1] * (self.q * self.Q + (1 - self.q) * (eye - self.Q))
        return A0, A1


def _projector_form(A: np.ndarray, tols: ToleranceConfig, name: str):
    """单个系数矩阵 → (p, P, s, 相位)"""
    trace = np.trace(A)
    if abs(trace) <= tols.zero_tol:
        raise NotProjectorForm(f"{name} 的迹为零")
    phase = trace / abs(trace)
    H = A * np.conj(phase)
    asym = float(np.max(np.abs(H - H.conj().T)))
    if asym > tols.tol:
        raise NotProjectorForm(f"{name} 去相位后不是厄米矩阵 (偏差 {asym:.3e})")
    H = (H + H.conj().T) / 2

    w, vecs = linalg.eigh(H)
    if w[0] < -tols.tol:
        raise NotProjectorForm(f"{name} 有负本征值 {w[0]:.3e}")

    a, b = w[-1], w[0]
    if a - b <= tols.gap:
        raise AmbiguousForm(f"{name} 正比于单位阵，投影不确定")
    top = np.abs(w - a) <= tols.gap
    bottom = np.abs(w - b) <= tols.gap
    if not np.all(top | bottom):
        raise NotProjectorForm(f"{name} 的本征值多于两个: {np.round(w, 10)}")

    s = a + max(b, 0.0)
    p = a / s
    if p - 0.5 <= tols.gap:
        raise AmbiguousForm(f"{name} 的 p 接近 1/2")
    basis = vecs[:, top]
    return float(p), basis @ basis.conj().T, float(s), complex(phase)


def detect_class_g(
    ensemble: EigenEnsemble, tols: Optional[ToleranceConfig] = None
) -> ProjectorPairForm:
    """
    检测投影对形式

    Raises:
        NotRankTwo: 秩不为 2
        NotProjectorForm: 非厄米、负本征值或多于两个本征值
        AmbiguousForm: 系数矩阵正比于单位阵
    """
    tols = resolve_tolerances(tols)
    if ensemble.rank != 2:
        raise NotRankTwo(f"秩为 {ensemble.rank}")
    p, P, s0, ph0 = _projector_form(ensemble.coeff_mats[0], tols, "A₀")
    q, Q, s1, ph1 = _projector_form(ensemble.coeff_mats[1], tols, "A₁")
    logger.debug(f"G 类形式: p={p:.6f}, q={q:.6f}")
    return ProjectorPairForm(
        n=ensemble.n,
        p=p,
        q=q,
        P=P,
        Q=Q,
        scales=(s0, s1),
        phases=(ph0, ph1),
        mu=np.asarray(ensemble.mus, dtype=float),
    )


@dataclass(frozen=True, eq=False)
class InvariantSetG:
    """G 类迹不变量"""

    n: int
    mus: np.ndarray
    p: float
    q: float
    rank_p: int
    rank_q: int
    tr_rho2: float
    tr_a02: float
    tr_a12: float
    vk: np.ndarray
    ek_plus: np.ndarray
    ek_minus: np.ndarray
    form: ProjectorPairForm
    supplied: bool = False

    def to_payload(self) -> InvariantSetGPayload:
        return InvariantSetGPayload(
            n=self.n,
            mus=real_list(self.mus),
            p=round_sig(self.p),
            q=round_sig(self.q),
            rank_p=self.rank_p,
            rank_q=self.rank_q,
            tr_rho2=round_sig(self.tr_rho2),
            tr_a02=round_sig(self.tr_a02),
            tr_a12=round_sig(self.tr_a12),
            vk=real_list(self.vk),
            ek_plus=real_list(self.ek_plus),
            ek_minus=real_list(self.ek_minus),
            supplied_ensemble=self.supplied,
        )


def _power_traces(M: np.ndarray, n: int, tol: float, what: str) -> np.ndarray:
    """Tr(M^k)，k = 1..n，断言虚部可忽略"""
    out = []
    power = np.eye(M.shape[0], dtype=complex)
    for _ in range(n):
        power = power @ M
        t = np.trace(power)
        if abs(t.imag) > tol * max(1.0, abs(t)):
            logger.warning(f"⚠️ {what} 的迹虚部 {t.imag:.3e} 超过容差")
        out.append(t.real)
    return np.asarray(out)


def compute_invariants_g(
    form: ProjectorPairForm,
    ensemble: EigenEnsemble,
    tols: Optional[ToleranceConfig] = None,
) -> InvariantSetG:
    """
    计算 Tr ρ²、Tr A₀²、Tr A₁²、Tr V^k 与 Tr (S E_±)^k

    E_± 为 V = (2P−1)(2Q−1) 在 ±1 处的谱投影，空本征空间给零矩阵。
    """
    tols = resolve_tolerances(tols)
    n = form.n
    rho = ensemble.reconstruct()
    A0, A1 = form.hermitian_mats()

    V = pair_unitary(form.P, form.Q)
    clusters = unitary_clusters(V, tols.cluster_tol)
    S = reflection(form.P)
    E_plus = spectral_projector(clusters, "+1", n)
    E_minus = spectral_projector(clusters, "-1", n)

    return InvariantSetG(
        n=n,
        mus=form.mu,
        p=form.p,
        q=form.q,
        rank_p=form.rank_p,
        rank_q=form.rank_q,
        tr_rho2=float(np.trace(rho @ rho).real),
        tr_a02=float(np.trace(A0 @ A0).real),
        tr_a12=float(np.trace(A1 @ A1).real),
        vk=_power_traces(V, n, tols.tol, "V^k"),
        ek_plus=_power_traces(S @ E_plus, n, tols.tol, "(S E_+)^k"),
        ek_minus=_power_traces(S @ E_minus, n, tols.tol, "(S E_−)^k"),
        form=form,
        supplied=ensemble.supplied,
    )


def compare_invariants_g(
    a: InvariantSetG, b: InvariantSetG, tol: Optional[float] = None
) -> DiffReport:
    """依次比较 μ、Tr ρ²、p、q、投影秩、Tr A²、Tr V^k、Tr (S E_±)^k"""
    tol = resolve_tolerances().tol if tol is None else tol
    if a.n != b.n:
        raise DimensionMismatch(f"局部维数不同: {a.n} vs {b.n}")

    checks = [
        (Stage.SPECTRUM, "mu", a.mus, b.mus),
        (Stage.TR_RHO2, "tr_rho2", a.tr_rho2, b.tr_rho2),
        (Stage.P_WEIGHT, "p", a.p, b.p),
        (Stage.Q_WEIGHT, "q", a.q, b.q),
        (Stage.RANK_P, "rank_p", a.rank_p, b.rank_p),
        (Stage.RANK_Q, "rank_q", a.rank_q, b.rank_q),
        (Stage.TR_A02, "tr_a02", a.tr_a02, b.tr_a02),
        (Stage.TR_A12, "tr_a12", a.tr_a12, b.tr_a12),
        (Stage.VK, "vk", a.vk, b.vk),
        (Stage.EK_PLUS, "ek_plus", a.ek_plus, b.ek_plus),
        (Stage.EK_MINUS, "ek_minus", a.ek_minus, b.ek_minus),
    ]
    for stage, name, x, y in checks:
        x, y = np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(y, dtype=float))
        diff = np.abs(x - y)
        scale = np.maximum(1.0, np.maximum(np.abs(x), np.abs(y)))
        bad = np.flatnonzero(diff > tol * scale)
        if len(bad):
            k = int(bad[0])
            where = name if len(x) == 1 else f"{name}[{k + 1}]"
            return DiffReport(False, stage, where, f"{name} 不同", float(diff.max()))
    return DiffReport(True)
