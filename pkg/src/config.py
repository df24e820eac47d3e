"""
配置管理模块
管理数值容差、Σ 枚举上限、性质测试套件和日志参数
"""

from typing import Optional
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

# 加载环境变量
load_dotenv()


class ToleranceConfig(BaseSettings):
    """数值容差配置"""

    model_config = SettingsConfigDict(env_prefix="LU_EQUIV_", extra="ignore")

    herm_tol: float = Field(1e-10, description="厄米性/迹/半正定检查容差 τ_herm")
    tol: float = Field(1e-8, description="数值相等容差 τ_eq (环境变量 LU_EQUIV_TOL)")
    gap: float = Field(1e-6, description="本征值简并判定间隔 δ_gap")
    rank_cut: float = Field(1e-10, description="本征值截断阈值")
    sv_gap: float = Field(1e-6, description="奇异值无重数间隔 δ_sv")
    zero_tol: float = Field(1e-10, description="分母非零判定阈值 τ_zero")
    cluster_tol: float = Field(1e-6, description="幺正矩阵谱的角度聚类容差")


class EnumerationConfig(BaseSettings):
    """Σ 枚举规模配置"""

    model_config = SettingsConfigDict(env_prefix="LU_EQUIV_ENUM_", extra="ignore")

    max_n: int = Field(4, description="完整枚举允许的最大局部维数")
    max_labels: int = Field(4, description="完整枚举允许的最大标签数 N")


class SuiteConfig(BaseSettings):
    """性质测试套件配置"""

    model_config = SettingsConfigDict(env_prefix="LU_EQUIV_SUITE_", extra="ignore")

    cases: int = Field(20, description="每个套件的默认用例数")
    seed: int = Field(20240101, description="默认随机种子")
    jobs: int = Field(4, description="并行线程数上限")


class LogConfig(BaseSettings):
    """日志配置"""

    model_config = SettingsConfigDict(env_prefix="LOG_", extra="ignore")

    level: str = Field("WARNING", description="日志级别")
    format: str = Field(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="日志格式",
    )


class Settings:
    """全局配置管理"""

    def __init__(self):
        self.tolerances = ToleranceConfig()
        self.enumeration = EnumerationConfig()
        self.suite = SuiteConfig()
        self.log = LogConfig()

    def tolerances_with(self, **overrides) -> ToleranceConfig:
        """返回覆盖了部分字段的容差配置副本"""
        clean = {k: v for k, v in overrides.items() if v is not None}
        return self.tolerances.model_copy(update=clean)


# 全局配置实例
settings = Settings()


def get_settings() -> Settings:
    """获取全局配置实例"""
    return settings


def resolve_tolerances(tols: Optional[ToleranceConfig] = None) -> ToleranceConfig:
    """调用方未给出容差时使用全局配置"""
    return tols if tols is not None else settings.tolerances
