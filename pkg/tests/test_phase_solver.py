"""
相位求解单元测试
"""

import sys
from pathlib import Path

# 添加项目路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import logging

import numpy as np
import pytest

from src.errors import DimensionMismatch, InconsistentPhases
from src.generation.random_states import random_class_f
from src.invariants.phases import solve_phases
from src.invariants.singular_frame import BStack, b_stack, svd_frame

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def rephase(b: BStack, u: np.ndarray) -> BStack:
    """c_ij = u_i conj(u_j) b_ij"""
    mats = u[None, :, None] * b.mats * np.conj(u)[None, None, :]
    return BStack(mats=mats, diag=b.diag.copy(), null_last=b.null_last)


class TestPhaseSolver:
    """相位求解"""

    def test_worked_example(self):
        """测试1: b₁₂ = 1，c₁₂ = i，λ₂ = 0 → u = (1, 1)，v₂ = −i"""
        b_mat = np.array([[[0, 1], [0, 0]]], dtype=complex)
        c_mat = np.array([[[0, 1j], [0, 0]]], dtype=complex)
        diag = np.array([1.0, 0.0])
        b = BStack(mats=b_mat, diag=diag, null_last=True)
        c = BStack(mats=c_mat, diag=diag, null_last=True)

        result = solve_phases(b, c)
        np.testing.assert_allclose(result.u, [1, 1], atol=1e-14)
        assert abs(result.v_n - (-1j)) < 1e-14
        np.testing.assert_allclose(result.column_phases, [1, -1j], atol=1e-14)
        assert result.components == 2
        logger.info("✅ 示例相位求解正确")

    @pytest.mark.parametrize("n,rank,seed", [(2, 2, 1), (3, 2, 2), (3, 3, 3), (4, 2, 4)])
    def test_recovers_random_phases(self, n, rank, seed):
        """测试2: 随机相位被恢复（差一个整体相位）"""
        state = random_class_f(n, rank, seed=seed)
        b = b_stack(svd_frame(state.ensemble.coeff_mats[0]), state.ensemble)
        rng = np.random.default_rng(seed)
        u_true = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        c = rephase(b, u_true)

        result = solve_phases(b, c)
        assert result.residual < 1e-10
        assert result.components == 1
        ratio = result.u / u_true
        np.testing.assert_allclose(ratio, ratio[0], atol=1e-10)

    def test_inconsistent_cycle(self):
        """测试3: c₁₂ = c₂₁ = i 不可能由相位给出"""
        b = BStack(mats=np.array([[[0, 1], [1, 0]]], dtype=complex), diag=np.array([0.8, 0.6]), null_last=False)
        c = BStack(mats=np.array([[[0, 1j], [1j, 0]]], dtype=complex), diag=np.array([0.8, 0.6]), null_last=False)
        with pytest.raises(InconsistentPhases):
            solve_phases(b, c)

    def test_shape_mismatch(self):
        """测试4: 两组 B 形状不同"""
        b = BStack(mats=np.zeros((1, 2, 2), dtype=complex), diag=np.array([0.8, 0.6]), null_last=False)
        c = BStack(mats=np.zeros((2, 2, 2), dtype=complex), diag=np.array([0.8, 0.6]), null_last=False)
        with pytest.raises(DimensionMismatch):
            solve_phases(b, c)


if __name__ == "__main__":
    pytest.main([__file__, "-v", "-s"])
