"""
态模块
二体密度矩阵、本征系综与多体态的二分视图
"""

from src.states.bipartite import (
    DensityMatrix,
    EigenEnsemble,
    LocalUnitaryPair,
    apply_local,
    eigen_decompose,
    make_local_pair,
    supplied_ensemble,
    validate_density,
)

__all__ = [
    "DensityMatrix",
    "EigenEnsemble",
    "LocalUnitaryPair",
    "apply_local",
    "eigen_decompose",
    "make_local_pair",
    "supplied_ensemble",
    "validate_density",
]
