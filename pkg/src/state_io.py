"""
态文件读写
密度矩阵、调用方分解、局部幺正对与各类报告的 JSON 序列化
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from src.config import ToleranceConfig
from src.data_models import (
    EnsemblePayload,
    LocalPairPayload,
    MatrixPayload,
    StatePayload,
    real_list,
)
from src.errors import BadDimension
from src.states.bipartite import (
    DensityMatrix,
    EigenEnsemble,
    LocalUnitaryPair,
    make_local_pair,
    supplied_ensemble,
    validate_density,
)
from src.states.multipartite import MultipartiteState, validate_multipartite

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def dump_json(model: BaseModel) -> str:
    """字节稳定的 JSON 文本"""
    return json.dumps(model.model_dump(mode="json"), indent=2, ensure_ascii=False, sort_keys=True)


def write_json(model: BaseModel, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(model) + "\n", encoding="utf-8")
    logger.info(f"已写入 {path}")
    return path


def _read_model(path: PathLike, model: type):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        return model.model_validate(data)
    except (json.JSONDecodeError, ValidationError) as e:
        raise BadDimension(f"{path} 格式错误: {e}") from e


# ==================== 态 ====================


@dataclass(frozen=True, eq=False)
class StateFile:
    """读入的态文件；二体文件给出 rho，多体文件给出 multipartite"""

    payload: StatePayload
    rho: Optional[DensityMatrix] = None
    ensemble: Optional[EigenEnsemble] = None
    multipartite: Optional[MultipartiteState] = None

    @property
    def label(self) -> Optional[str]:
        return self.payload.label


def state_to_payload(
    rho: DensityMatrix,
    ensemble: Optional[EigenEnsemble] = None,
    label: Optional[str] = None,
) -> StatePayload:
    """二体态 → StatePayload，只有调用方分解才随态保存"""
    ens_payload = None
    if ensemble is not None and ensemble.supplied:
        ens_payload = EnsemblePayload(
            mus=real_list(ensemble.mus),
            coeff_mats=[MatrixPayload.from_array(A) for A in ensemble.coeff_mats],
        )
    base = MatrixPayload.from_array(rho.mat)
    return StatePayload(**base.model_dump(), n=rho.n, ensemble=ens_payload, label=label)


def multipartite_to_payload(s: MultipartiteState, label: Optional[str] = None) -> StatePayload:
    base = MatrixPayload.from_array(s.mat)
    return StatePayload(**base.model_dump(), dims=list(s.dims), label=label)


def payload_to_state(payload: StatePayload, tols: Optional[ToleranceConfig] = None) -> StateFile:
    """
    StatePayload → 校验过的态

    Raises:
        BadDimension / NotHermitian / TraceNotOne / NotPSD: 矩阵非法
        EnsembleMismatch: 附带的分解不能重构 ρ
    """
    mat = payload.to_array()
    if payload.dims is not None:
        return StateFile(payload=payload, multipartite=validate_multipartite(mat, payload.dims, tols))

    rho = validate_density(mat, payload.n, tols)
    ensemble = None
    if payload.ensemble is not None:
        mats = np.stack([m.to_array() for m in payload.ensemble.coeff_mats])
        ensemble = supplied_ensemble(rho, payload.ensemble.mus, mats, tols)
    return StateFile(payload=payload, rho=rho, ensemble=ensemble)


def read_state(path: PathLike, tols: Optional[ToleranceConfig] = None) -> StateFile:
    """读取态文件"""
    state = payload_to_state(_read_model(path, StatePayload), tols)
    logger.debug(f"读取态文件 {path}: n={state.payload.n}, dims={state.payload.dims}")
    return state


def write_state(
    path: PathLike,
    rho: DensityMatrix,
    ensemble: Optional[EigenEnsemble] = None,
    label: Optional[str] = None,
) -> Path:
    return write_json(state_to_payload(rho, ensemble, label), path)


# ==================== 局部幺正对 ====================


def pair_to_payload(pair: LocalUnitaryPair) -> LocalPairPayload:
    return LocalPairPayload(U=MatrixPayload.from_array(pair.U), V=MatrixPayload.from_array(pair.V))


def read_local_pair(path: PathLike, tols: Optional[ToleranceConfig] = None) -> LocalUnitaryPair:
    """
    读取 {"U": ..., "V": ...} 文件（见证文件的 residual 字段被忽略）

    Raises:
        NotUnitary: U 或 V 不是幺正矩阵
    """
    payload = _read_model(path, LocalPairPayload)
    return make_local_pair(payload.U.to_array(), payload.V.to_array(), tols)
