"""
-*- coding: utf-8 -*-
@Author: li
@Email: lijianqiao2906@live.com
@FileName: config.py
@DateTime: 2025/03/08 04:30:00
@Docs: 应用程序配置管理（数值参数、日志、随机种子等）
"""

from functools import lru_cache
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """应用程序配置类"""

    # 模型配置
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",  # 嵌套变量分隔符
        case_sensitive=True,  # 环境变量区分大小写
        extra="ignore",  # 忽略额外字段
    )

    # 应用配置
    APP_NAME: str = Field(default="majority-switching")
    APP_VERSION: str = Field(default="0.1.0")
    APP_DESCRIPTION: str = Field(default="三扩散过程多数决策的最优切换仿真与解析估值工具")
    SCHEMA_VERSION: str = Field(default="1.0")
    DEBUG: bool = Field(default=False)

    # 项目根目录
    BASE_DIR: Path = Path(__file__).parent.parent.parent

    # 日志配置
    LOG_LEVEL: str = Field(default="INFO")
    LOG_TO_FILE: bool = Field(default=False)
    LOG_DIR: Path | None = Field(default=None)

    @property
    def LOG_PATH(self) -> Path:
        """获取日志目录"""
        return self.LOG_DIR or Path(self.BASE_DIR) / "logs"

    # 随机数与仿真配置
    DEFAULT_SEED: int = Field(default=20240601, ge=0, lt=2**64)
    SIM_STEP: float = Field(default=1e-4)
    CENSOR_HORIZON: float = Field(default=50.0)
    BATCH_SIZE: int = Field(default=2000, ge=1)
    WORKERS: int = Field(default=1, ge=1)
    SURVIVAL_GRID_POINTS: int = Field(default=200, ge=2)

    # 数值积分与常微分方程求解
    QUAD_EPSABS: float = Field(default=1e-12)
    QUAD_EPSREL: float = Field(default=1e-12)
    QUAD_LIMIT: int = Field(default=200, ge=10)
    QUAD_TARGET: float = Field(default=1e-8)  # 积分误差估计的硬上限
    EIGEN_RTOL: float = Field(default=1e-11)
    EIGEN_ATOL: float = Field(default=1e-13)
    EIGEN_CHECK_POINTS: int = Field(default=201, ge=11)
    NATURAL_SCALE_GRID_POINTS: int = Field(default=4001, ge=101)

    # 有限差分与外推
    FD_SECOND_SPACING: float = Field(default=1e-3)
    FD_FIRST_SPACING: float = Field(default=1e-4)
    RICHARDSON_R0: float = Field(default=1e-2)

    # 容差
    EPSILON_BOUND_M: float = Field(default=3.0)
    DEGENERATE_TOL: float = Field(default=1e-12)
    ALLOCATION_TOL: float = Field(default=1e-9)

    @field_validator(
        "SIM_STEP",
        "CENSOR_HORIZON",
        "QUAD_EPSABS",
        "QUAD_EPSREL",
        "QUAD_TARGET",
        "EIGEN_RTOL",
        "EIGEN_ATOL",
        "FD_SECOND_SPACING",
        "FD_FIRST_SPACING",
        "RICHARDSON_R0",
        "EPSILON_BOUND_M",
        "DEGENERATE_TOL",
        "ALLOCATION_TOL",
    )
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """校验数值参数为正

        Args:
            v: 参数值

        Returns:
            原值
        """
        if v <= 0:
            raise ValueError("数值参数必须为正数")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """校验日志级别"""
        level = v.upper()
        if level not in {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"不支持的日志级别: {v}")
        return level


@lru_cache
def get_settings() -> Settings:
    """获取应用程序配置

    Returns:
        Settings: 应用程序配置
    """
    return Settings()


# 导出配置
settings = get_settings()
