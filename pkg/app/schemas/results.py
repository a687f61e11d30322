"""
-*- coding: utf-8 -*-
@Author: li
@Email: lijianqiao2906@live.com
@FileName: results.py
@DateTime: 2025/06/28 10:20:00
@Docs: 实验结果Pydantic模型
"""

from typing import Any

from pydantic import Field

from app.core.enums import CheckStatus

from .base import BaseResult, BaseSchema


class StrategySummary(BaseSchema):
    """单个策略的汇总"""

    strategy: str = Field(description="策略名称")
    n_paths: int = Field(description="路径数")
    mean_time: float | None = Field(description="未删失路径的平均决策时间")
    standard_error: float | None = Field(description="平均决策时间的标准误")
    decision_frequency: float | None = Field(description="决策值为 1 的频率")
    decision_standard_error: float | None = Field(description="决策频率的标准误")
    censor_count: int = Field(description="删失路径数")


class DominanceEntry(BaseSchema):
    """居中策略相对某个基线策略的比较"""

    baseline: str = Field(description="基线策略")
    violations: int = Field(description="生存曲线高于基线超过 k 倍合并标准误的网格点数")
    mean_difference: float | None = Field(description="居中策略平均时间减去基线平均时间")
    combined_standard_error: float | None = Field(description="平均时间差的合并标准误")


class SimulateResult(BaseResult):
    """simulate 子命令结果"""

    x0: tuple[float, float, float] = Field(description="初始状态（自然尺度下）")
    diffusion: str = Field(description="扩散模型")
    step: float = Field(description="时间步长")
    decision_probability: float = Field(description="与策略无关的理论决策概率")
    summaries: list[StrategySummary] = Field(description="各策略汇总")
    dominance: list[DominanceEntry] = Field(default_factory=list, description="随机占优比较")


class KSReport(BaseSchema):
    """双样本 KS 检验"""

    statistic: float = Field(description="KS 统计量")
    p_value: float = Field(description="渐近 p 值")
    n_a: int = Field(description="扰动布朗运动样本数")
    n_b: int = Field(description="对照样本数")


class DpbmResult(BaseResult):
    """dpbm 子命令结果"""

    x0: tuple[float, float, float] = Field(description="初始状态")
    gaps: tuple[float, float] = Field(description="(i0', s0')")
    exit_interval: tuple[float, float] = Field(description="出界区间")
    middle_seed: int = Field(description="居中策略臂的种子")
    mean_dpbm: float = Field(description="扰动布朗运动平均出界时间")
    mean_middle: float = Field(description="居中过程平均出界时间")
    test: KSReport = Field(description="主检验")
    control: KSReport | None = Field(default=None, description="阴性对照检验")


class GammaEntry(BaseSchema):
    """单个 p 的增长率报告"""

    p: float = Field(description="叶子概率")
    rates: dict[str, float] = Field(description="各深度的 r_n^{1/n}")
    sub_multiplicative: bool | None = Field(description="r2 <= r1² 是否成立")


class TreeResult(BaseResult):
    """tree 子命令报告"""

    bracket: tuple[float, float] = Field(description="γ 的已知区间")
    entries: list[GammaEntry] = Field(description="各 p 的增长率")


class ValueResult(BaseResult):
    """value 子命令的运行摘要，逐点数值写入表格"""

    rows: int = Field(description="输出行数")
    failures: int = Field(description="计算失败的行数")


class CheckItem(BaseSchema):
    """单项验收结果"""

    criterion: int = Field(description="验收项编号")
    name: str = Field(description="验收项名称")
    status: CheckStatus = Field(description="状态")
    metrics: dict[str, Any] = Field(default_factory=dict, description="度量")
    message: str | None = Field(default=None, description="失败原因")


class CheckReport(BaseResult):
    """check 子命令报告"""

    passed: bool = Field(description="全部通过")
    items: list[CheckItem] = Field(description="各验收项")
