"""
二体密度矩阵单元测试
"""

import sys
from pathlib import Path

# 添加项目路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import logging

import numpy as np
import pytest

from src.errors import BadDimension, EnsembleMismatch, NotHermitian, NotPSD, NotUnitary, TraceNotOne
from src.generation.fixtures import werner_ensemble_mats, werner_matrix
from src.generation.random_states import haar_random_unitary, random_class_f, random_local_pair
from src.states.bipartite import (
    LocalUnitaryPair,
    apply_local,
    apply_local_to_ensemble,
    coeff_to_vec,
    compose_pairs,
    conjugation_residual,
    eigen_decompose,
    make_local_pair,
    spectrum,
    supplied_ensemble,
    validate_density,
    vec_to_coeff,
)

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


# ==================== 测试夹具 ====================

@pytest.fixture
def mixed_state():
    """秩 3 的随机 3⊗3 态"""
    return random_class_f(3, 3, seed=11)


# ==================== 单元测试 ====================

class TestValidation:
    """密度矩阵校验"""

    def test_accepts_werner(self):
        """测试1: Werner 态通过校验"""
        rho = validate_density(werner_matrix(0.5), 2)
        assert rho.n == 2 and rho.dim == 4
        logger.info("✅ Werner 态校验通过")

    def test_rejects_non_hermitian(self):
        """测试2: 非厄米矩阵"""
        mat = np.eye(4, dtype=complex) / 4
        mat[0, 1] = 0.1j
        with pytest.raises(NotHermitian):
            validate_density(mat, 2)

    def test_rejects_trace(self):
        """测试3: 迹不为 1"""
        with pytest.raises(TraceNotOne):
            validate_density(np.eye(4) / 2, 2)

    def test_rejects_negative(self):
        """测试4: 负本征值"""
        mat = np.diag([0.6, 0.6, -0.1, -0.1])
        with pytest.raises(NotPSD):
            validate_density(mat, 2)

    def test_rejects_dimension(self):
        """测试5: 维数错误"""
        with pytest.raises(BadDimension):
            validate_density(np.eye(4) / 4, 3)
        with pytest.raises(BadDimension):
            validate_density(np.ones((1, 1)), 1)
        with pytest.raises(BadDimension):
            validate_density(np.full((4, 4), np.nan), 2)
        logger.info("✅ 非法输入均被拒绝")


class TestReshaping:
    """向量与系数矩阵互转"""

    def test_row_major(self):
        """测试1: ⟨ij|ξ⟩ 位于下标 i·n + j"""
        xi = np.zeros(9, dtype=complex)
        xi[1 * 3 + 2] = 1
        A = vec_to_coeff(xi, 3)
        assert A[1, 2] == 1
        np.testing.assert_array_equal(coeff_to_vec(A), xi)

    def test_wrong_length(self):
        """测试2: 长度不符"""
        with pytest.raises(BadDimension):
            vec_to_coeff(np.zeros(5), 2)


class TestEigenDecomposition:
    """本征系综"""

    def test_reconstructs(self, mixed_state):
        """测试1: 系综重构 ρ，μ 降序"""
        ens = eigen_decompose(mixed_state.rho)
        assert ens.rank == 3 and ens.N == 2
        assert np.all(np.diff(ens.mus) < 0)
        np.testing.assert_allclose(ens.reconstruct(), mixed_state.rho.mat, atol=1e-12)
        logger.info("✅ 本征系综重构成功")

    def test_degenerate_groups(self):
        """测试2: 最大混态全部简并"""
        ens = eigen_decompose(validate_density(np.eye(4) / 4, 2))
        assert ens.is_degenerate
        assert ens.degenerate_groups == ((0, 1, 2, 3),)

    def test_spectrum_is_full(self):
        """测试3: spectrum 返回全部 n² 个本征值"""
        rho = validate_density(werner_matrix(0.5), 2)
        np.testing.assert_allclose(spectrum(rho), [5 / 8, 1 / 8, 1 / 8, 1 / 8], atol=1e-14)


class TestSuppliedEnsemble:
    """调用方给出的分解"""

    def test_werner_decomposition(self):
        """测试1: Werner 分解被接受并标记 supplied"""
        rho = validate_density(werner_matrix(0.5), 2)
        ens = supplied_ensemble(rho, [1 / 8, 1 / 8, 1 / 8, 5 / 8], werner_ensemble_mats())
        assert ens.supplied
        assert ens.degenerate_groups == ((0, 1, 2),)

    def test_mismatch(self):
        """测试2: 权重不能重构 ρ"""
        rho = validate_density(werner_matrix(0.5), 2)
        with pytest.raises(EnsembleMismatch):
            supplied_ensemble(rho, [1 / 4, 1 / 4, 1 / 4, 1 / 4], werner_ensemble_mats())

    def test_unnormalized(self):
        """测试3: 系数矩阵未归一"""
        rho = validate_density(werner_matrix(0.5), 2)
        with pytest.raises(EnsembleMismatch):
            supplied_ensemble(rho, [1 / 8, 1 / 8, 1 / 8, 5 / 8], 2 * werner_ensemble_mats())


class TestLocalAction:
    """局部幺正作用"""

    def test_inverse_restores(self, mixed_state):
        """测试1: (U, V) 后接 (U*, V*) 回到原态"""
        pair = random_local_pair(3, seed=5)
        inverse = LocalUnitaryPair(U=pair.U.conj().T, V=pair.V.conj().T)
        back = apply_local(apply_local(mixed_state.rho, pair), inverse)
        np.testing.assert_allclose(back.mat, mixed_state.rho.mat, atol=1e-12)

    def test_ensemble_consistent(self, mixed_state):
        """测试2: A_l ↦ U A_l V* 与 (U⊗V̄)ρ(U⊗V̄)* 一致"""
        pair = random_local_pair(3, seed=6)
        moved = apply_local_to_ensemble(mixed_state.ensemble, pair)
        np.testing.assert_allclose(
            moved.reconstruct(), apply_local(mixed_state.rho, pair).mat, atol=1e-12
        )
        logger.info("✅ 系综与密度矩阵上的局部作用一致")

    def test_compose(self, mixed_state):
        """测试3: 合成两个局部对"""
        first, second = random_local_pair(3, seed=7), random_local_pair(3, seed=8)
        both = compose_pairs(first, second)
        target = apply_local(apply_local(mixed_state.rho, first), second)
        assert conjugation_residual(mixed_state.rho, target, both) < 1e-12

    def test_make_local_pair_checks_unitarity(self):
        """测试4: 非幺正矩阵被拒绝"""
        U = haar_random_unitary(2, seed=1)
        make_local_pair(U, U)
        with pytest.raises(NotUnitary):
            make_local_pair(U, 2 * U)
        with pytest.raises(BadDimension):
            make_local_pair(U, np.eye(3))


if __name__ == "__main__":
    pytest.main([__file__, "-v", "-s"])
