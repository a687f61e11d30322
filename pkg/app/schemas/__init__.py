"""
-*- coding: utf-8 -*-
@Author: li
@Email: lijianqiao2906@live.com
@FileName: __init__.py
@DateTime: 2025/06/20 00:00:00
@Docs: Pydantic校验模型模块初始化
"""

from .base import BaseConfig, BaseResult, BaseSchema, Provenance
from .experiment import (
    CheckConfig,
    DiffusionConfig,
    DpbmConfig,
    RunConfig,
    SimulateConfig,
    StrategyConfig,
    TreeConfig,
    ValueConfig,
)
from .results import (
    CheckItem,
    CheckReport,
    DominanceEntry,
    DpbmResult,
    GammaEntry,
    KSReport,
    SimulateResult,
    StrategySummary,
    TreeResult,
    ValueResult,
)

__all__ = [
    # 基础模型
    "BaseSchema",
    "BaseConfig",
    "BaseResult",
    "Provenance",
    # 实验配置
    "DiffusionConfig",
    "StrategyConfig",
    "RunConfig",
    "SimulateConfig",
    "ValueConfig",
    "DpbmConfig",
    "TreeConfig",
    "CheckConfig",
    # 结果
    "StrategySummary",
    "DominanceEntry",
    "SimulateResult",
    "KSReport",
    "DpbmResult",
    "GammaEntry",
    "TreeResult",
    "ValueResult",
    "CheckItem",
    "CheckReport",
]
