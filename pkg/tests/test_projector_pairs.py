"""
投影对幺正构造单元测试
"""

import sys
from pathlib import Path

# 添加项目路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import logging

import numpy as np
import pytest

from src.errors import DimensionMismatch, SpectrumMismatch
from src.generation.random_states import haar_random_unitary, random_projector, random_projector_pair
from src.invariants.projector_pairs import (
    construct_unitary_pairform,
    pair_unitary,
    reflection,
    spectral_projector,
    unitary_clusters,
)

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def conjugate(X: np.ndarray, M: np.ndarray) -> np.ndarray:
    return X @ M @ X.conj().T


def pair_residual(U, P, Q, P2, Q2) -> float:
    return float(np.linalg.norm(conjugate(U, P) - P2) + np.linalg.norm(conjugate(U, Q) - Q2))


class TestReflection:
    """反射与谱聚类"""

    def test_reflection_squares_to_identity(self):
        """测试1: S² = I"""
        S = reflection(random_projector(4, 2, seed=1))
        np.testing.assert_allclose(S @ S, np.eye(4), atol=1e-12)

    def test_cluster_order(self):
        """测试2: 簇按 +1、−1、上半平面、下半平面排列"""
        P, Q = random_projector_pair(4, seed=2, rank_p=2, rank_q=3)
        clusters = unitary_clusters(pair_unitary(P, Q), 1e-6)
        kinds = [c.kind for c in clusters]
        order = {"+1": 0, "-1": 1, "upper": 2, "lower": 3}
        assert kinds == sorted(kinds, key=order.get)
        assert sum(c.dim for c in clusters) == 4
        upper = [c.angle for c in clusters if c.kind == "upper"]
        assert upper == sorted(upper)
        logger.info(f"✅ 簇顺序 {kinds}")

    def test_spectral_projector(self):
        """测试3: E₊ 是 V 在 +1 处的谱投影"""
        P, Q = random_projector_pair(3, seed=3, rank_p=2, rank_q=2)
        V = pair_unitary(P, Q)
        E = spectral_projector(unitary_clusters(V, 1e-6), "+1", 3)
        np.testing.assert_allclose(V @ E, E, atol=1e-10)
        assert abs(np.trace(E).real - 1) < 1e-10
        np.testing.assert_array_equal(spectral_projector([], "-1", 3), np.zeros((3, 3)))


class TestConstruction:
    """U P U* = P'，U Q U* = Q'"""

    @pytest.mark.parametrize("n,rank_p,rank_q,seed", [(2, 1, 1, 11), (3, 1, 2, 12), (3, 2, 2, 13), (4, 2, 2, 14), (4, 1, 3, 15)])
    def test_conjugated_pair(self, n, rank_p, rank_q, seed):
        """测试1: X 共轭的随机投影对"""
        P, Q = random_projector_pair(n, seed=seed, rank_p=rank_p, rank_q=rank_q)
        X = haar_random_unitary(n, seed=seed + 100)
        P2, Q2 = conjugate(X, P), conjugate(X, Q)
        U = construct_unitary_pairform(P, Q, P2, Q2)
        np.testing.assert_allclose(U @ U.conj().T, np.eye(n), atol=1e-10)
        assert pair_residual(U, P, Q, P2, Q2) <= 1e-8

    def test_four_intersections(self):
        """测试2: P∩Q、P∩Q⊥、P⊥∩Q、P⊥∩Q⊥ 各一维"""
        Z = haar_random_unitary(4, seed=21)
        P = Z[:, [0, 1]] @ Z[:, [0, 1]].conj().T
        Q = Z[:, [0, 2]] @ Z[:, [0, 2]].conj().T
        X = haar_random_unitary(4, seed=22)
        P2, Q2 = conjugate(X, P), conjugate(X, Q)
        U = construct_unitary_pairform(P, Q, P2, Q2)
        assert pair_residual(U, P, Q, P2, Q2) <= 1e-8
        logger.info("✅ 四个交空间的情形构造成功")

    def test_spectrum_mismatch(self):
        """测试3: (P, P) 与 (P, 1−P) 的 V 分别为 I 与 −I"""
        P = random_projector(3, 1, seed=31)
        with pytest.raises(SpectrumMismatch):
            construct_unitary_pairform(P, P, P, np.eye(3) - P)

    def test_dimension_mismatch(self):
        """测试4: 投影维数不同"""
        with pytest.raises(DimensionMismatch):
            construct_unitary_pairform(np.eye(2), np.eye(2), np.eye(3), np.eye(3))


if __name__ == "__main__":
    pytest.main([__file__, "-v", "-s"])
