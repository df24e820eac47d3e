"""
异常定义
局部幺正等价判定各模块抛出的具名错误
"""


class LUEquivalenceError(Exception):
    """所有库错误的基类"""


# ---- 维度与态的合法性 ----


class BadDimension(LUEquivalenceError):
    """矩阵形状与声明的维数不符"""


class NotHermitian(LUEquivalenceError):
    """矩阵不是厄米的"""


class NotPSD(LUEquivalenceError):
    """矩阵存在负本征值"""


class TraceNotOne(LUEquivalenceError):
    """迹不等于 1"""


class DimensionMismatch(LUEquivalenceError):
    """两个对象的局部维数不同"""


class NotUnitary(LUEquivalenceError):
    """矩阵不是幺正的"""


class EnsembleMismatch(LUEquivalenceError):
    """给定的系综不能重构密度矩阵"""


# ---- F 类 ----


class EpsTooLarge(LUEquivalenceError):
    """扰动幅度会改变奇异值的顺序"""


class NotMultiplicityFree(LUEquivalenceError):
    """A₀ 的奇异值有重数"""


class InconsistentPhases(LUEquivalenceError):
    """相位约束存在不相容的回路"""


class ResidualTooLarge(LUEquivalenceError):
    """构造出的见证幺正未通过残差验证"""


class EnumerationTooLarge(LUEquivalenceError):
    """Σ 枚举超出配置上限"""


# ---- 类归属 ----


class OutOfClass(LUEquivalenceError):
    """态不属于判定器所要求的类"""

    def __init__(self, reason: str, message: str = ""):
        self.reason = reason
        super().__init__(message or reason)


class NotRankTwo(OutOfClass):
    """态的秩不是 2"""

    def __init__(self, message: str = ""):
        super().__init__("not_rank_two", message)


class NotProjectorForm(OutOfClass):
    """系数矩阵不是投影对形式"""

    def __init__(self, message: str = ""):
        super().__init__("not_projector_form", message)


class AmbiguousForm(OutOfClass):
    """p 或 q 接近 1/2，投影算子不确定"""

    def __init__(self, message: str = ""):
        super().__init__("ambiguous_form", message)


# ---- G 类构造 ----


class SpectrumMismatch(LUEquivalenceError):
    """两个幺正矩阵的谱或重数不一致"""


# ---- 多体 ----


class BadCut(LUEquivalenceError):
    """子系统划分非法"""


class UnequalCut(LUEquivalenceError):
    """二分两侧维数不等，二体判定器不可用"""


# ---- 夹具 ----


class ParamConstraintViolated(LUEquivalenceError):
    """夹具参数违反约束"""


class NotOrthogonal(LUEquivalenceError):
    """两个纯态不正交"""
