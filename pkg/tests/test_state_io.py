"""
态文件读写单元测试
"""

import sys
from pathlib import Path

# 添加项目路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

import json
import logging

import numpy as np
import pytest

from src.data_models import MatrixPayload
from src.errors import BadDimension, EnsembleMismatch, NotUnitary
from src.generation.fixtures import werner_fixture
from src.generation.random_states import haar_random_unitary, random_class_f
from src.state_io import (
    dump_json,
    multipartite_to_payload,
    pair_to_payload,
    read_local_pair,
    read_state,
    state_to_payload,
    write_json,
    write_state,
)
from src.states.bipartite import LocalUnitaryPair
from src.states.multipartite import validate_multipartite

# 配置日志
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


class TestStateFiles:
    """态文件"""

    def test_werner_with_ensemble(self, tmp_path):
        """测试1: 调用方分解随态保存并读回"""
        fixture = werner_fixture(0.5)
        path = write_state(tmp_path / "werner.json", fixture.rho, fixture.ensemble, "werner p=0.5")
        state = read_state(path)
        assert state.label == "werner p=0.5"
        assert state.ensemble is not None and state.ensemble.supplied
        np.testing.assert_allclose(state.rho.mat, fixture.rho.mat, atol=1e-14)
        np.testing.assert_allclose(state.ensemble.mus, fixture.ensemble.mus, atol=1e-14)
        logger.info("✅ Werner 态文件读写一致")

    def test_eigen_ensemble_not_written(self, tmp_path):
        """测试2: 本征分解不写入文件"""
        state = random_class_f(2, 2, seed=1)
        payload = state_to_payload(state.rho, state.ensemble)
        assert payload.ensemble is None
        read = read_state(write_json(payload, tmp_path / "f.json"))
        assert read.ensemble is None and read.rho.n == 2

    def test_dump_is_stable(self):
        """测试3: 同一态两次序列化字节相同"""
        state = random_class_f(3, 2, seed=2)
        first = dump_json(state_to_payload(state.rho, label="x"))
        second = dump_json(state_to_payload(state.rho, label="x"))
        assert first == second
        data = json.loads(first)
        assert data["n"] == 3 and data["rows"] == 9
        assert list(data) == sorted(data)

    def test_multipartite(self, tmp_path):
        """测试4: 多体态文件"""
        s = validate_multipartite(np.eye(8) / 8, (2, 2, 2))
        path = write_json(multipartite_to_payload(s, "mixed"), tmp_path / "m.json")
        state = read_state(path)
        assert state.rho is None
        assert state.multipartite.dims == (2, 2, 2)

    def test_malformed(self, tmp_path):
        """测试5: 非法 JSON 或缺少 n/dims"""
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        with pytest.raises(BadDimension):
            read_state(bad)

        base = MatrixPayload.from_array(np.eye(4) / 4).model_dump()
        missing = tmp_path / "missing.json"
        missing.write_text(json.dumps(base), encoding="utf-8")
        with pytest.raises(BadDimension):
            read_state(missing)

    def test_ensemble_mismatch(self, tmp_path):
        """测试6: 附带的分解与 ρ 不符"""
        fixture = werner_fixture(0.5)
        payload = state_to_payload(fixture.rho, fixture.ensemble)
        data = payload.model_dump(mode="json")
        data["ensemble"]["mus"] = [0.25, 0.25, 0.25, 0.25]
        path = tmp_path / "mismatch.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        with pytest.raises(EnsembleMismatch):
            read_state(path)


class TestLocalPairFiles:
    """局部幺正对文件"""

    def test_round_trip(self, tmp_path):
        """测试1: 读回的对与写出的对一致"""
        pair = LocalUnitaryPair(U=haar_random_unitary(3, seed=1), V=haar_random_unitary(3, seed=2))
        path = write_json(pair_to_payload(pair), tmp_path / "w.json")
        back = read_local_pair(path)
        np.testing.assert_allclose(back.U, pair.U, atol=1e-14)
        np.testing.assert_allclose(back.V, pair.V, atol=1e-14)

    def test_not_unitary(self, tmp_path):
        """测试2: 非幺正矩阵"""
        pair = LocalUnitaryPair(U=2 * np.eye(2), V=np.eye(2))
        path = write_json(pair_to_payload(pair), tmp_path / "w.json")
        with pytest.raises(NotUnitary):
            read_local_pair(path)


if __name__ == "__main__":
    pytest.main([__file__, "-v", "-s"])
