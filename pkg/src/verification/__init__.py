"""
验证模块
提供局部幺正等价判定与见证验证
"""

from src.verification.equivalence_verifier import (
    EquivalenceVerdict,
    EquivalenceVerifier,
    decide_equivalence,
    decide_equivalence_f,
    decide_equivalence_g,
)

__all__ = [
    "EquivalenceVerdict",
    "EquivalenceVerifier",
    "decide_equivalence",
    "decide_equivalence_f",
    "decide_equivalence_g",
]
