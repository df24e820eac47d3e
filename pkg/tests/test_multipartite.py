"""
多体态二分视图、部分迹与分阶段判定单元测试
"""

import sys
from pathlib import Path

# 添加项目路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import logging

import numpy as np
import pytest

from src.data_models import StagedOutcome, Verdict
from src.errors import BadCut, BadDimension, DimensionMismatch
from src.generation.random_states import haar_random_unitary, random_class_f
from src.states.multipartite import (
    Bipartition,
    MultipartiteState,
    apply_local_product,
    bipartition_view,
    default_cuts,
    plan_stages,
    reduce_trace,
    restore_from_view,
    staged_equivalence,
    validate_multipartite,
)

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


# ==================== 测试夹具 ====================

def random_density(dim: int, rank: int, seed: int) -> np.ndarray:
    cols = haar_random_unitary(dim, seed=seed)[:, :rank]
    weights = np.linspace(1.0, 0.5, rank)
    mat = (cols * (weights / weights.sum())) @ cols.conj().T
    return (mat + mat.conj().T) / 2


def random_locals(dims, seed: int):
    rng = np.random.default_rng(seed)
    return [haar_random_unitary(d, rng) for d in dims]


@pytest.fixture
def three_party():
    """2⊗3⊗2 的随机态"""
    return validate_multipartite(random_density(12, 3, seed=1), (2, 3, 2))


@pytest.fixture
def f_class_tripartite():
    """把 4⊗4 的 F 类态看作 4⊗2⊗2 三体态"""
    state = random_class_f(4, 2, seed=401)
    return validate_multipartite(state.rho.mat, (4, 2, 2))


# ==================== 单元测试 ====================

class TestViews:
    """二分视图"""

    def test_view_matches_index_oracle(self, three_party):
        """测试1: B|AC 视图逐元素与下标重排一致"""
        cut = Bipartition.of((1,), 3)
        assert cut.label() == "B|AC"
        view = bipartition_view(three_party, cut)
        assert (view.n_left, view.n_right) == (3, 4)
        assert view.unequal_cut

        T = three_party.mat.reshape(2, 3, 2, 2, 3, 2)
        for a in range(2):
            for b in range(3):
                for c in range(2):
                    for a2 in range(2):
                        for b2 in range(3):
                            for c2 in range(2):
                                row = b * 4 + a * 2 + c
                                col = b2 * 4 + a2 * 2 + c2
                                assert view.mat[row, col] == T[a, b, c, a2, b2, c2]
        logger.info("✅ 视图与下标重排一致")

    def test_restore(self, three_party):
        """测试2: restore_from_view 还原原矩阵"""
        for left in [(0,), (1,), (2,), (0, 2)]:
            view = bipartition_view(three_party, Bipartition.of(left, 3))
            back = restore_from_view(view)
            np.testing.assert_array_equal(back.mat, three_party.mat)

    def test_bad_cuts(self, three_party):
        """测试3: 非法二分"""
        with pytest.raises(BadCut):
            bipartition_view(three_party, Bipartition((0,), (0, 1, 2)))
        with pytest.raises(BadCut):
            bipartition_view(three_party, Bipartition((0,), (1,)))
        with pytest.raises(BadCut):
            bipartition_view(three_party, Bipartition((), (0, 1, 2)))

    def test_validation(self):
        """测试4: dims 与矩阵不符"""
        with pytest.raises(BadDimension):
            validate_multipartite(np.eye(8) / 8, (2, 3))
        with pytest.raises(BadDimension):
            validate_multipartite(np.eye(4) / 4, ())


class TestPartialTrace:
    """部分迹"""

    def test_product_state(self):
        """测试1: Tr_B(ρ_A⊗ρ_B⊗ρ_C) = ρ_A⊗ρ_C"""
        rho_a, rho_b, rho_c = random_density(2, 2, 11), random_density(3, 2, 12), random_density(2, 1, 13)
        s = validate_multipartite(np.kron(np.kron(rho_a, rho_b), rho_c), (2, 3, 2))
        reduced = reduce_trace(s, [1])
        assert reduced.dims == (2, 2)
        np.testing.assert_allclose(reduced.mat, np.kron(rho_a, rho_c), atol=1e-12)
        only_c = reduce_trace(s, [0, 1])
        np.testing.assert_allclose(only_c.mat, rho_c, atol=1e-12)

    def test_trace_preserved(self, three_party):
        """测试2: 部分迹保持迹为 1"""
        for traced in ([0], [1], [2], [0, 2]):
            assert abs(np.trace(reduce_trace(three_party, traced).mat) - 1) < 1e-12

    def test_invalid(self, three_party):
        """测试3: 越界、重复或迹掉全部"""
        for traced in ([3], [0, 0], [0, 1, 2]):
            with pytest.raises(BadCut):
                reduce_trace(three_party, traced)

    def test_local_product_commutes(self, three_party):
        """测试4: 迹掉的子系统上的局部幺正不影响约化态"""
        moved = apply_local_product(three_party, random_locals((2, 3, 2), seed=14))
        a = reduce_trace(three_party, [0, 2]).mat
        b = reduce_trace(moved, [0, 2]).mat
        np.testing.assert_allclose(np.linalg.eigvalsh(a), np.linalg.eigvalsh(b), atol=1e-12)
        with pytest.raises(BadDimension):
            apply_local_product(three_party, [np.eye(2)])


class TestStagePlan:
    """阶段展开"""

    def test_default_three_party(self):
        """测试1: 三体缺省阶段"""
        labels = [p.label for p in plan_stages(3, default_cuts(3))]
        assert labels == ["A|BC", "B|AC", "C|AB", "Tr_A:B|C", "Tr_B:A|C", "Tr_C:A|B"]

    def test_four_party_chain(self):
        """测试2: 四体 A|BCD 逐级迹掉"""
        labels = [p.label for p in plan_stages(4, [Bipartition.of((0,), 4)])]
        assert labels == ["A|BCD", "Tr_A:B|CD", "Tr_AB:C|D"]

    def test_two_party(self):
        """测试3: 二体只有一个阶段"""
        assert [p.label for p in plan_stages(2, default_cuts(2))] == ["A|B"]
        with pytest.raises(BadCut):
            default_cuts(1)


class TestStagedEquivalence:
    """分阶段判定"""

    def test_local_product_equivalent(self, f_class_tripartite):
        """测试1: 局部乘积幺正共轭后每个阶段都等价"""
        sB = apply_local_product(f_class_tripartite, random_locals((4, 2, 2), seed=402))
        result = staged_equivalence(f_class_tripartite, sB, cuts=[Bipartition.of((0,), 3)], jobs=2)
        assert [label for label, _ in result.stages] == ["A|BC", "Tr_A:B|C"]
        assert all(v.verdict is Verdict.EQUIVALENT for _, v in result.stages)
        assert result.overall is StagedOutcome.EQUIVALENT_PER_STAGES
        logger.info("✅ 每个阶段判定等价")

    def test_nonlocal_on_remainder(self, f_class_tripartite):
        """测试2: BC 上的非局部幺正只在约化阶段被发现"""
        V = haar_random_unitary(4, seed=403)
        K = np.kron(np.eye(4), V)
        sB = MultipartiteState(dims=(4, 2, 2), mat=K @ f_class_tripartite.mat @ K.conj().T)
        result = staged_equivalence(f_class_tripartite, sB, cuts=[Bipartition.of((0,), 3)])
        verdicts = dict(result.stages)
        assert verdicts["A|BC"].verdict is Verdict.EQUIVALENT
        assert verdicts["Tr_A:B|C"].verdict is Verdict.INEQUIVALENT
        assert result.overall is StagedOutcome.INEQUIVALENT

    def test_degenerate_stage_inconclusive(self):
        """测试3: 某阶段不在类中时结论为 inconclusive，其余阶段照常判定"""
        sigma = random_class_f(2, 3, seed=404).rho.mat
        rho_a = np.diag([0.5, 0.5, 0.0, 0.0])
        sA = validate_multipartite(np.kron(rho_a, sigma), (4, 2, 2))
        sB = apply_local_product(sA, random_locals((4, 2, 2), seed=405))
        result = staged_equivalence(sA, sB, cuts=[Bipartition.of((0,), 3)])
        first, second = (v for _, v in result.stages)
        assert first.verdict is Verdict.OUT_OF_CLASS
        assert first.reason == "F: degenerate_spectrum; G: not_rank_two"
        assert second.verdict is Verdict.EQUIVALENT
        assert result.overall is StagedOutcome.INCONCLUSIVE

    def test_unequal_cut(self, three_party):
        """测试4: 两侧维数不等的阶段报告 unequal_cut"""
        result = staged_equivalence(three_party, three_party)
        verdicts = dict(result.stages)
        assert verdicts["A|BC"].reason == "unequal_cut"
        assert result.overall is StagedOutcome.INCONCLUSIVE
        report = result.to_report()
        assert report.caveat
        assert [s.label for s in report.stages] == [label for label, _ in result.stages]

    def test_dimension_mismatch(self, three_party):
        """测试5: 子系统维数不同"""
        other = validate_multipartite(np.eye(12) / 12, (3, 2, 2))
        with pytest.raises(DimensionMismatch):
            staged_equivalence(three_party, other)


if __name__ == "__main__":
    pytest.main([__file__, "-v", "-s"])
