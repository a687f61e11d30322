"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: enums.py
@DateTime: 2025/01/20 16:00:00
@Docs: 系统统一枚举定义
"""

from enum import Enum

# ==================== 扩散过程相关枚举 ====================


class DiffusionKind(Enum):
    """内置扩散模型枚举"""

    BROWNIAN = "bm"  # 标准布朗运动 sigma≡1
    CONSTANT_DRIFT = "constant-drift"  # 常数漂移
    TABULATED = "tabulated"  # 表格插值


class ExitSide(Enum):
    """出界方向枚举"""

    LOWER = "lower"
    UPPER = "upper"


# ==================== 策略相关枚举 ====================


class StrategyKind(Enum):
    """时间分配策略类型"""

    RUN_THE_MIDDLE = "run_the_middle"
    RUN_TWO_THEN_THIRD = "run_two_then_third"
    ROUND_ROBIN = "round_robin"
    RUN_EXTREME = "run_extreme"
    EPSILON_STRATEGY = "epsilon_strategy"


class ExtremeKind(Enum):
    """极值策略方向"""

    MAX = "max"
    MIN = "min"


class DiscretizeRule(Enum):
    """ε离散化块规则"""

    EARLIEST_DEMAND = "earliest_demand"  # 最早未满足需求优先
    LARGEST_DEFICIT = "largest_deficit"  # 最大欠额优先


# ==================== 实验与输出相关枚举 ====================


class CommandName(Enum):
    """命令行子命令"""

    SIMULATE = "simulate"
    VALUE = "value"
    DPBM = "dpbm"
    TREE = "tree"
    CHECK = "check"


class OutputFormat(Enum):
    """表格输出格式"""

    CSV = "csv"
    JSON = "json"


class ExpectedTimeMethod(Enum):
    """期望决策时间的计算方法"""

    RICHARDSON = "richardson"
    CLOSED_FORM = "closed_form"


class CheckStatus(Enum):
    """验收检查状态"""

    PASSED = "passed"
    FAILED = "failed"
    SKIPPED = "skipped"
