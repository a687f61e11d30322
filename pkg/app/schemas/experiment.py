"""
-*- coding: utf-8 -*-
@Author: li
@Email: lijianqiao2906@live.com
@FileName: experiment.py
@DateTime: 2025/06/28 09:30:00
@Docs: 实验配置Pydantic校验模型
"""

from typing import Annotated

from pydantic import AfterValidator, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.core.enums import DiffusionKind, ExtremeKind, StrategyKind

from .base import BaseConfig, BaseSchema


def _check_triple(v: tuple[float, float, float]) -> tuple[float, float, float]:
    if any(not 0.0 <= x <= 1.0 for x in v):
        raise ValueError("状态分量必须位于 [0,1]")
    return v


Triple = Annotated[tuple[float, float, float], AfterValidator(_check_triple)]


class DiffusionConfig(BaseSchema):
    """扩散模型配置"""

    model_config = ConfigDict(extra="forbid")

    kind: DiffusionKind = Field(default=DiffusionKind.BROWNIAN, description="扩散类型")
    drift: float = Field(default=0.0, description="常数漂移")
    sigma: float = Field(default=1.0, gt=0, description="常数波动率")
    grid: list[float] | None = Field(default=None, description="表格网格")
    sigma_values: list[float] | None = Field(default=None, description="网格上的 sigma")
    mu_values: list[float] | None = Field(default=None, description="网格上的 mu")
    label: str | None = Field(default=None, max_length=100, description="模型名称")

    @model_validator(mode="after")
    def validate_table(self) -> "DiffusionConfig":
        """表格扩散必须给出网格与 sigma"""
        if self.kind == DiffusionKind.TABULATED.value and (self.grid is None or self.sigma_values is None):
            raise ValueError("tabulated 扩散必须提供 grid 与 sigma_values")
        return self


class StrategyConfig(BaseSchema):
    """策略配置"""

    model_config = ConfigDict(extra="forbid")

    kind: StrategyKind = Field(description="策略类型")
    pair: tuple[int, int] = Field(default=(1, 2), description="run_two_then_third 的先后两个分量")
    block: float = Field(default=0.01, gt=0, description="round_robin 的块长")
    which: ExtremeKind = Field(default=ExtremeKind.MAX, description="run_extreme 的方向")
    epsilon: float | None = Field(default=None, gt=0, description="epsilon_strategy 的块长")
    base: StrategyKind = Field(default=StrategyKind.RUN_THE_MIDDLE, description="epsilon_strategy 的基础策略")

    @model_validator(mode="after")
    def validate_epsilon(self) -> "StrategyConfig":
        """ε 策略必须给出块长"""
        if self.kind == StrategyKind.EPSILON_STRATEGY.value and self.epsilon is None:
            raise ValueError("epsilon_strategy 必须提供 epsilon")
        return self


class RunConfig(BaseConfig):
    """蒙特卡洛实验的公共参数"""

    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0, description="随机种子")
    paths: int = Field(default=10_000, ge=1, description="每个实验臂的路径数")
    step: float = Field(default_factory=lambda: settings.SIM_STEP, gt=0, lt=1, description="时间步长")
    horizon: float = Field(default_factory=lambda: settings.CENSOR_HORIZON, gt=0, description="删失时长")


class SimulateConfig(RunConfig):
    """simulate 子命令配置"""

    diffusion: DiffusionConfig = Field(default_factory=DiffusionConfig, description="扩散模型")
    x0: Triple = Field(default=(0.3, 0.5, 0.7), description="初始状态")
    strategies: list[StrategyConfig] = Field(
        default_factory=lambda: [
            StrategyConfig(kind=StrategyKind.RUN_THE_MIDDLE),
            StrategyConfig(kind=StrategyKind.RUN_TWO_THEN_THIRD),
        ],
        min_length=1,
        description="参与比较的策略",
    )
    survival_points: int = Field(default_factory=lambda: settings.SURVIVAL_GRID_POINTS, ge=2, description="生存曲线网格点数")
    raw_samples: bool = Field(default=False, description="是否输出原始决策时间")


class ValueConfig(BaseConfig):
    """value 子命令配置：显式点列表或由坐标轴生成的有序三元组网格"""

    diffusion: DiffusionConfig = Field(default_factory=DiffusionConfig, description="扩散模型")
    r_values: list[float] = Field(default_factory=lambda: [1.0], min_length=1, description="折现率")
    points: list[Triple] = Field(default_factory=list, description="显式状态点")
    axis: list[float] = Field(default_factory=list, description="生成网格的坐标值")
    expected_time: bool = Field(default=False, description="是否附加期望决策时间列")

    @field_validator("r_values")
    @classmethod
    def validate_rates(cls, v: list[float]) -> list[float]:
        """折现率必须为正"""
        if any(r <= 0 for r in v):
            raise ValueError("折现率必须为正")
        return v

    @field_validator("axis")
    @classmethod
    def validate_axis(cls, v: list[float]) -> list[float]:
        """坐标值必须位于 [0,1] 且不重复"""
        if any(not 0.0 <= x <= 1.0 for x in v) or len(set(v)) != len(v):
            raise ValueError("坐标值必须位于 [0,1] 且不重复")
        return sorted(v)

    @model_validator(mode="after")
    def validate_grid(self) -> "ValueConfig":
        """至少给出一种网格"""
        if not self.points and not self.axis:
            raise ValueError("points 与 axis 至少提供一个")
        return self

    def grid(self) -> list[Triple]:
        """显式点在前，其后为坐标轴上的所有 x1 <= x2 <= x3 组合"""
        axis = self.axis
        generated = [
            (a, b, c)
            for i, a in enumerate(axis)
            for j, b in enumerate(axis[i:], start=i)
            for c in axis[j:]
        ]
        return list(self.points) + generated


class DpbmConfig(RunConfig):
    """dpbm 子命令配置，两个实验臂使用不同的种子"""

    paths: int = Field(default=10_000, ge=1, description="每个实验臂的路径数")
    x0: Triple = Field(default=(0.2, 0.5, 0.8), description="初始状态")
    middle_seed: int | None = Field(default=None, ge=0, description="居中策略臂的种子，缺省为 seed + 1")
    control_gaps: tuple[float, float] | None = Field(default=None, description="阴性对照使用的 (i0', s0')")

    @field_validator("control_gaps")
    @classmethod
    def validate_gaps(cls, v: tuple[float, float] | None) -> tuple[float, float] | None:
        """对照间隔必须为正"""
        if v is not None and any(g <= 0 for g in v):
            raise ValueError("对照间隔必须为正")
        return v

    @property
    def resolved_middle_seed(self) -> int:
        return self.seed + 1 if self.middle_seed is None else self.middle_seed


class TreeConfig(BaseConfig):
    """tree 子命令配置"""

    p_grid: list[float] = Field(default_factory=lambda: [0.1, 0.25, 0.5, 0.75, 0.9], min_length=1, description="叶子概率")
    depths: list[int] = Field(default_factory=lambda: [1, 2], min_length=1, description="树深度")
    exact: bool = Field(default=False, description="是否使用有理数运算")

    @field_validator("p_grid")
    @classmethod
    def validate_p_grid(cls, v: list[float]) -> list[float]:
        """概率必须位于 (0,1)"""
        if any(not 0.0 < p < 1.0 for p in v):
            raise ValueError("p 必须位于 (0,1)")
        return v


class CheckConfig(RunConfig):
    """check 子命令配置，缺省规模适合桌面运行，全规模在配置文件中给出"""

    paths: int = Field(default=4_000, ge=1, description="蒙特卡洛路径数")
    step: float = Field(default=1e-3, gt=0, lt=1, description="时间步长")
    horizon: float = Field(default=10.0, gt=0, description="删失时长，run_extreme 可能长期不决策")
    criteria: list[int] = Field(default_factory=lambda: list(range(1, 13)), min_length=1, description="运行的验收项")
    sigma_se: float = Field(default=3.0, gt=0, description="蒙特卡洛判据的标准误倍数")
    r_values: list[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0], min_length=1, description="准则 1 的折现率")
    random_points: int = Field(default=50, ge=1, description="随机内部点个数")
    pasting_points: int = Field(default=20, ge=1, description="切换平面随机点个数")
    residual_tol: float = Field(default=1e-4, gt=0, description="PDE 残差容差")
    pasting_tol: float = Field(default=1e-3, gt=0, description="光滑粘合容差")
    dpbm_replications: int = Field(default=20, ge=1, description="KS 重复次数")
    dpbm_paths: int = Field(default=2_000, ge=1, description="每次 KS 每臂路径数")
    dpbm_min_pass: float = Field(default=0.9, gt=0, le=1, description="KS 通过的最低比例")
    allocation_records: int = Field(default=100, ge=1, description="随机分配路径条数")
    tree_points: int = Field(default=99, ge=1, description="树代价的 p 网格点数")
    reproducibility_paths: int = Field(default=5_000, ge=1, description="可复现性检查的路径数，需跨越多个批次")
    reproducibility_workers: list[int] = Field(default_factory=lambda: [1, 2, 8], min_length=2, description="比较的工作线程数")

    @field_validator("criteria")
    @classmethod
    def validate_criteria(cls, v: list[int]) -> list[int]:
        """验收项编号为 1..12"""
        if any(c not in range(1, 13) for c in v):
            raise ValueError("验收项编号必须为 1..12")
        return sorted(set(v))
