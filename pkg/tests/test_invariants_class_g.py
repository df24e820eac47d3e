"""
G 类检测、不变量与判定单元测试
"""

import sys
from pathlib import Path

# 添加项目路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import logging

import numpy as np
import pytest

from src.data_models import Stage, StateClass, Verdict
from src.errors import AmbiguousForm, NotProjectorForm, NotRankTwo
from src.generation.fixtures import random_d_computable_fixture, w_frame_pair, werner_fixture
from src.generation.random_states import (
    haar_random_unitary,
    plant_local,
    random_class_g,
    shift_spectrum,
)
from src.invariants.class_g import compare_invariants_g, compute_invariants_g, detect_class_g
from src.states.bipartite import EigenEnsemble, LocalUnitaryPair, apply_local
from src.verification.equivalence_verifier import EquivalenceVerifier

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


# ==================== 测试夹具 ====================

@pytest.fixture
def verifier():
    return EquivalenceVerifier()


@pytest.fixture
def g_state():
    return random_class_g(3, seed=301, rank_p=1, rank_q=2)


def conjugate_xx(state, seed: int):
    X = haar_random_unitary(state.rho.n, seed=seed)
    return plant_local(state, LocalUnitaryPair(U=X, V=X.copy()))


# ==================== 单元测试 ====================

class TestDetection:
    """投影对形式检测"""

    def test_detects_generated(self, g_state):
        """测试1: 随机 G 类态被识别，p, q ∈ (0.6, 0.95)"""
        form = detect_class_g(g_state.ensemble)
        assert 0.6 <= form.p <= 0.95 and 0.6 <= form.q <= 0.95
        assert form.rank_p == 1 and form.rank_q == 2
        np.testing.assert_allclose(form.P @ form.P, form.P, atol=1e-10)
        A0, _ = form.hermitian_mats()
        np.testing.assert_allclose(A0 * form.phases[0], g_state.ensemble.coeff_mats[0], atol=1e-10)
        logger.info(f"✅ p={form.p:.4f}, q={form.q:.4f}")

    def test_not_rank_two(self):
        """测试2: Werner 态秩为 4"""
        with pytest.raises(NotRankTwo) as exc:
            detect_class_g(werner_fixture(0.5).ensemble)
        assert exc.value.reason == "not_rank_two"

    def test_ambiguous(self):
        """测试3: A₀ ∝ I 时投影不确定"""
        mats = np.stack([np.eye(2) / np.sqrt(2), np.diag([1.0, 0.0])]).astype(complex)
        ens = EigenEnsemble(n=2, mus=np.array([0.6, 0.4]), coeff_mats=mats, supplied=True)
        with pytest.raises(AmbiguousForm):
            detect_class_g(ens)

    def test_three_eigenvalues(self):
        """测试4: A₀ 有三个不同本征值"""
        A0 = np.diag([0.7, 0.5, 0.1])
        A0 = A0 / np.linalg.norm(A0)
        mats = np.stack([A0, np.diag([0.0, 0.0, 1.0])]).astype(complex)
        ens = EigenEnsemble(n=3, mus=np.array([0.6, 0.4]), coeff_mats=mats, supplied=True)
        with pytest.raises(NotProjectorForm):
            detect_class_g(ens)

    def test_global_phase_removed(self, g_state):
        """测试5: 系数矩阵乘整体相位不影响检测"""
        mats = g_state.ensemble.coeff_mats * np.array([np.exp(0.4j), np.exp(-1.3j)])[:, None, None]
        form = detect_class_g(g_state.ensemble.with_coeff_mats(mats))
        base = detect_class_g(g_state.ensemble)
        assert abs(form.p - base.p) < 1e-10
        np.testing.assert_allclose(form.Q, base.Q, atol=1e-10)


class TestInvariantsG:
    """G 类迹不变量"""

    def test_invariant_under_xx(self, g_state):
        """测试1: (X, X) 共轭下不变量一致"""
        planted = conjugate_xx(g_state, seed=302)
        inv_a = compute_invariants_g(detect_class_g(g_state.ensemble), g_state.ensemble)
        inv_b = compute_invariants_g(detect_class_g(planted.ensemble), planted.ensemble)
        diff = compare_invariants_g(inv_a, inv_b)
        assert diff.equal, f"{diff.stage}: {diff.location}"
        assert len(inv_a.vk) == 3
        logger.info("✅ G 类不变量在 (X, X) 共轭下不变")

    def test_intersection_trace(self):
        """测试2: n=3、两个秩 2 投影时 P∩Q 一维，Tr(S E₊) = 1"""
        state = random_class_g(3, seed=303, rank_p=2, rank_q=2)
        inv = compute_invariants_g(detect_class_g(state.ensemble), state.ensemble)
        assert abs(inv.ek_plus[0] - 1) < 1e-8
        np.testing.assert_allclose(inv.ek_minus, 0, atol=1e-12)

    def test_spectrum_difference(self, g_state):
        """测试3: μ 改变时在 SPECTRUM 阶段报告差异"""
        other = shift_spectrum(g_state.ensemble, 1e-3, 0)
        inv_a = compute_invariants_g(detect_class_g(g_state.ensemble), g_state.ensemble)
        inv_b = compute_invariants_g(detect_class_g(other.ensemble), other.ensemble)
        diff = compare_invariants_g(inv_a, inv_b)
        assert not diff.equal and diff.stage is Stage.SPECTRUM


class TestDecideG:
    """G 类判定"""

    def test_planted_equivalent(self, verifier, g_state):
        """测试1: (X, X) 植入对判定等价"""
        planted = conjugate_xx(g_state, seed=304)
        result = verifier.decide_g(g_state.rho, planted.rho, None, g_state.ensemble, planted.ensemble)
        assert result.verdict is Verdict.EQUIVALENT
        assert result.state_class is StateClass.G
        assert result.residual <= 1e-8
        logger.info(f"✅ G 类见证残差 {result.residual:.2e}")

    def test_shifted_inequivalent(self, verifier, g_state):
        """测试2: μ 扰动后判定不等价"""
        other = shift_spectrum(g_state.ensemble, 1e-3, 0)
        result = verifier.decide_g(g_state.rho, other.rho, None, g_state.ensemble, other.ensemble)
        assert result.verdict is Verdict.INEQUIVALENT
        assert result.stage is Stage.SPECTRUM

    def test_d_computable_with_w(self, verifier):
        """测试3: d-可计算样例经 W 共轭后判定等价"""
        fixture = random_d_computable_fixture(0.7, seed=305)
        pair = w_frame_pair(fixture.W, haar_random_unitary(4, seed=306))
        rho_b = apply_local(fixture.rho, pair)
        result = verifier.decide_g(fixture.rho, rho_b, fixture.W)
        assert result.verdict is Verdict.EQUIVALENT
        assert result.witness.meta.get("conjugated_by_w")

    def test_d_computable_distinguished_by_mu(self, verifier):
        """测试4: μ 不同的两个 d-可计算样例不等价"""
        a = random_d_computable_fixture(0.7, seed=307)
        b = random_d_computable_fixture(0.8, seed=308)
        result = verifier.decide_g(a.rho, b.rho, a.W)
        assert result.verdict is Verdict.INEQUIVALENT

    def test_out_of_class(self, verifier):
        """测试5: Werner 态不属于 G 类"""
        rho = werner_fixture(0.5).rho
        result = verifier.decide_g(rho, rho)
        assert result.verdict is Verdict.OUT_OF_CLASS
        assert result.reason == "not_rank_two"


if __name__ == "__main__":
    pytest.main([__file__, "-v", "-s"])
