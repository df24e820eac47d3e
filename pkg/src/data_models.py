"""
数据模型定义
态文件、不变量集合、判定报告和测试套件汇总的 JSON 结构
"""

from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator


SIGNIFICANT_DIGITS = 15


def round_sig(x: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    """保留有效数字，保证输出字节稳定"""
    value = float(f"{float(x):.{digits}g}")
    return 0.0 if value == 0 else value


def complex_pair(z: complex) -> List[float]:
    """复数 → [re, im]"""
    z = complex(z)
    return [round_sig(z.real), round_sig(z.imag)]


def real_list(values) -> List[float]:
    return [round_sig(v) for v in np.asarray(values, dtype=float).ravel()]


def real_matrix(mat) -> List[List[float]]:
    return [real_list(row) for row in np.asarray(mat, dtype=float)]


class Verdict(str, Enum):
    """判定结论"""

    EQUIVALENT = "equivalent"  # 局部幺正等价（见证已验证）
    INEQUIVALENT = "inequivalent"  # 不变量不同
    OUT_OF_CLASS = "out_of_class"  # 不属于判定器所需的类
    CONDITIONAL = "conditional_on_decomposition"  # 依赖调用方给出的分解

    @property
    def exit_code(self) -> int:
        return {
            Verdict.EQUIVALENT: 0,
            Verdict.INEQUIVALENT: 1,
            Verdict.CONDITIONAL: 1,
            Verdict.OUT_OF_CLASS: 2,
        }[self]


class Stage(str, Enum):
    """比较阶段（首个差异的位置）"""

    SPECTRUM = "spectrum"
    CLASS = "class"
    C_VEC = "c_vec"
    B_ABS = "b_abs"
    SIGMA_DOMAIN = "sigma_domain"
    D_VECS = "d_vecs"
    D_TAIL = "d_tail"
    I_VALUES = "i_values"
    PHASES = "phases"
    WITNESS = "witness"
    TR_RHO2 = "tr_rho2"
    P_WEIGHT = "p"
    Q_WEIGHT = "q"
    TR_A02 = "tr_a02"
    TR_A12 = "tr_a12"
    RANK_P = "rank_p"
    RANK_Q = "rank_q"
    VK = "vk"
    EK_PLUS = "ek_plus"
    EK_MINUS = "ek_minus"


class StateClass(str, Enum):
    """判定器选择"""

    F = "f"
    G = "g"
    AUTO = "auto"
    ANY = "any"


class MatrixPayload(BaseModel):
    """复矩阵的 JSON 格式 {"rows","cols","re","im"}"""

    rows: int = Field(..., description="行数")
    cols: int = Field(..., description="列数")
    re: List[List[float]] = Field(..., description="实部，行优先")
    im: List[List[float]] = Field(..., description="虚部，行优先")

    @model_validator(mode="after")
    def _check_shape(self):
        for name, part in (("re", self.re), ("im", self.im)):
            if len(part) != self.rows or any(len(row) != self.cols for row in part):
                raise ValueError(f"{name} 形状与 rows={self.rows}, cols={self.cols} 不符")
        return self

    @classmethod
    def from_array(cls, mat: np.ndarray) -> "MatrixPayload":
        mat = np.asarray(mat, dtype=complex)
        return cls(
            rows=mat.shape[0],
            cols=mat.shape[1],
            re=real_matrix(mat.real),
            im=real_matrix(mat.imag),
        )

    def to_array(self) -> np.ndarray:
        return np.asarray(self.re, dtype=float) + 1j * np.asarray(self.im, dtype=float)


class EnsemblePayload(BaseModel):
    """调用方给出的分解 ρ = Σ μ_l |ξ_l⟩⟨ξ_l|"""

    mus: List[float] = Field(..., description="权重 μ_l")
    coeff_mats: List[MatrixPayload] = Field(..., description="系数矩阵 A_l")

    @model_validator(mode="after")
    def _check_lengths(self):
        if len(self.mus) != len(self.coeff_mats):
            raise ValueError("mus 与 coeff_mats 个数不一致")
        return self


class StatePayload(MatrixPayload):
    """态文件：矩阵加上 n（二体）或 dims（多体），可选附带分解"""

    n: Optional[int] = Field(None, description="二体局部维数")
    dims: Optional[List[int]] = Field(None, description="多体各子系统维数")
    ensemble: Optional[EnsemblePayload] = Field(None, description="调用方给出的分解")
    label: Optional[str] = Field(None, description="来源说明")

    @model_validator(mode="after")
    def _check_dims(self):
        if (self.n is None) == (self.dims is None):
            raise ValueError("n 与 dims 必须且只能给出一个")
        return self


class InvariantSetFPayload(BaseModel):
    """F 类不变量集合"""

    state_class: StateClass = StateClass.F
    n: int
    rank: int
    spectrum: List[float] = Field(..., description="系综权重 μ_l")
    b_abs: List[List[List[float]]] = Field(..., description="|B_l|, l=1..N")
    c_vec: List[float] = Field(..., description="奇异值 λ_1..λ_n")
    d_vecs: List[List[List[float]]] = Field(..., description="D_l 的 [re, im] 列表")
    d_tail: Optional[List[List[float]]] = Field(None, description="λ_n > 0 时的 (n,n) 对角元")
    sigma_domain: str
    sigma: List[List[List[int]]] = Field(..., description="[i_path, j_path, l_labels, m_labels]")
    i_values: List[List[float]] = Field(..., description="I 值的 [re, im]")
    unanchored_labels: List[int] = Field(default_factory=list)
    supplied_ensemble: bool = False
    warnings: List[str] = Field(default_factory=list)


class InvariantSetGPayload(BaseModel):
    """G 类不变量集合"""

    state_class: StateClass = StateClass.G
    n: int
    mus: List[float]
    p: float
    q: float
    rank_p: int
    rank_q: int
    tr_rho2: float
    tr_a02: float
    tr_a12: float
    vk: List[float]
    ek_plus: List[float]
    ek_minus: List[float]
    supplied_ensemble: bool = False


class FirstDiff(BaseModel):
    """首个差异"""

    stage: Stage
    location: Optional[str] = None
    detail: str = ""
    deviation: Optional[float] = None


class LocalPairPayload(BaseModel):
    """局部幺正对 (U, V)，如 --w-conj 文件"""

    U: MatrixPayload
    V: MatrixPayload


class WitnessPayload(LocalPairPayload):
    """见证局部幺正对"""

    residual: float


class VerdictReport(BaseModel):
    """二体判定报告"""

    verdict: Verdict
    state_class: Optional[StateClass] = None
    first_diff: Optional[FirstDiff] = None
    out_of_class_reason: Optional[str] = None
    residual: Optional[float] = None
    witness: Optional[WitnessPayload] = None
    warnings: List[str] = Field(default_factory=list)
    message: str = ""


class StageReport(BaseModel):
    """多体分阶段判定中的一个阶段"""

    label: str = Field(..., description="阶段标签，如 A|BC 或 Tr_A:B|C")
    report: VerdictReport


class StagedOutcome(str, Enum):
    """多体分阶段判定的总体结论"""

    EQUIVALENT_PER_STAGES = "equivalent_per_stages"  # 每个阶段都等价
    INEQUIVALENT = "inequivalent"  # 至少一个阶段不等价
    INCONCLUSIVE = "inconclusive"  # 有阶段不在类中或依赖分解


class StagedVerdictReport(BaseModel):
    """多体分阶段判定报告"""

    overall: StagedOutcome
    caveat: str
    stages: List[StageReport]


class RandomSpecModel(BaseModel):
    """随机实例描述，CLI 写法 `n=3,rank=2,seed=7,class=F`"""

    n: int = Field(2, ge=2)
    rank: int = Field(2, ge=1)
    seed: int = 0
    state_class: StateClass = Field(StateClass.F, alias="class")
    min_gap: float = Field(1e-2, gt=0, description="谱间隔下限")

    model_config = {"populate_by_name": True}

    @classmethod
    def from_cli(cls, text: str) -> "RandomSpecModel":
        fields = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            if "=" not in part:
                raise ValueError(f"无法解析 '{part}'，应为 key=value")
            key, value = (s.strip() for s in part.split("=", 1))
            fields["class" if key in ("class", "state_class") else key] = (
                value.lower() if key in ("class", "state_class") else value
            )
        return cls.model_validate(fields)


class SuiteSummaryRow(BaseModel):
    """性质测试套件汇总的一行"""

    suite: str
    cases: int
    passed: int
    failed: int
    first_failure: Optional[str] = None
    seconds: float = 0.0
