"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: strategies.py
@DateTime: 2025/06/23 11:20:00
@Docs: 时间分配策略 - 根据已观测信息选择下一步运行的分量
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from app.core.enums import ExtremeKind, StrategyKind
from app.core.exceptions import NoDecisionNeededError, ParameterError
from app.simulation.state import TripleState, decision_mask

if TYPE_CHECKING:
    from app.schemas.experiment import StrategyConfig


@dataclass
class HistorySummary:
    """策略可读取的有界历史摘要（批量形式，每行一条路径）

    只包含已观测信息：当前状态、吸收标记、各分量运行最小/最大值、
    已走步数与步长、上一步的选择（-1 表示尚未选择）。
    """

    states: np.ndarray
    absorbed: np.ndarray
    running_min: np.ndarray
    running_max: np.ndarray
    step_count: np.ndarray
    step: float
    previous: np.ndarray

    @classmethod
    def initial(cls, states: np.ndarray, step: float) -> "HistorySummary":
        states = np.atleast_2d(np.asarray(states, dtype=float))
        n = states.shape[0]
        return cls(
            states=states,
            absorbed=(states <= 0.0) | (states >= 1.0),
            running_min=states.copy(),
            running_max=states.copy(),
            step_count=np.zeros(n, dtype=np.int64),
            step=step,
            previous=np.full(n, -1, dtype=np.int64),
        )

    def subset(self, rows: np.ndarray) -> "HistorySummary":
        return HistorySummary(
            states=self.states[rows],
            absorbed=self.absorbed[rows],
            running_min=self.running_min[rows],
            running_max=self.running_max[rows],
            step_count=self.step_count[rows],
            step=self.step,
            previous=self.previous[rows],
        )


def _block_steps(length: float, step: float) -> int:
    return max(1, int(round(length / step)))


def _first_true(mask: np.ndarray) -> np.ndarray:
    """每行第一个 True 的列号"""
    return np.argmax(mask, axis=1)


class Strategy(ABC):
    """分配策略基类

    choose 返回从 0 开始的分量下标；对外接口 choose_index 使用 1..3。
    """

    kind: StrategyKind

    @property
    @abstractmethod
    def name(self) -> str:
        """报告中使用的策略名称"""

    @abstractmethod
    def choose(self, summary: HistorySummary) -> np.ndarray:
        """为每条未决策路径选择要运行的分量"""

    def __repr__(self) -> str:
        return self.name


class RunTheMiddle(Strategy):
    """始终运行取值居中的分量

    并列时在中间值候选中取最小下标：上方并列时等价于跟随较小者，下方并列时跟随较大者。
    """

    kind = StrategyKind.RUN_THE_MIDDLE

    @property
    def name(self) -> str:
        return "run_the_middle"

    def choose(self, summary: HistorySummary) -> np.ndarray:
        states = summary.states
        middle = np.median(states, axis=1)
        candidates = (states == middle[:, None]) & ~summary.absorbed
        fallback = ~summary.absorbed
        has_candidate = candidates.any(axis=1)
        return np.where(has_candidate, _first_true(candidates), _first_true(fallback))


class RunTwoThenThird(Strategy):
    """先运行 pair[0] 至吸收，再 pair[1]，最后第三个分量"""

    kind = StrategyKind.RUN_TWO_THEN_THIRD

    def __init__(self, pair: tuple[int, int] = (1, 2)):
        first, second = pair
        if {first, second} - {1, 2, 3} or first == second:
            raise ParameterError("pair 必须是 1..3 中两个不同的下标", parameter="pair", value=pair)
        self.pair = (first, second)
        self._order = np.array([first - 1, second - 1, 6 - first - second - 1])

    @property
    def name(self) -> str:
        return f"run_two_then_third({self.pair[0]},{self.pair[1]})"

    def choose(self, summary: HistorySummary) -> np.ndarray:
        open_in_order = ~summary.absorbed[:, self._order]
        return self._order[_first_true(open_in_order)]


class RoundRobin(Strategy):
    """按固定时间块在未吸收分量间轮转"""

    kind = StrategyKind.ROUND_ROBIN

    def __init__(self, block: float):
        if not block > 0:
            raise ParameterError("轮转块长度必须为正", parameter="block", value=block)
        self.block = block

    @property
    def name(self) -> str:
        return f"round_robin({self.block:g})"

    def choose(self, summary: HistorySummary) -> np.ndarray:
        slot = summary.step_count // _block_steps(self.block, summary.step)
        open_mask = ~summary.absorbed
        count = np.maximum(open_mask.sum(axis=1), 1)
        # 未吸收分量按下标排在前面
        order = np.argsort(summary.absorbed, axis=1, kind="stable")
        position = slot % count
        return order[np.arange(len(order)), position]


class RunExtreme(Strategy):
    """运行未吸收分量中的最大（或最小）者，可能永不决策"""

    kind = StrategyKind.RUN_EXTREME

    def __init__(self, which: ExtremeKind = ExtremeKind.MAX):
        self.which = ExtremeKind(which)

    @property
    def name(self) -> str:
        return f"run_extreme({self.which.value})"

    def choose(self, summary: HistorySummary) -> np.ndarray:
        if self.which is ExtremeKind.MAX:
            masked = np.where(summary.absorbed, -np.inf, summary.states)
            return np.argmax(masked, axis=1)
        masked = np.where(summary.absorbed, np.inf, summary.states)
        return np.argmin(masked, axis=1)


class EpsilonStrategy(Strategy):
    """只在 kε 时刻按基础策略重新选择，块内保持不变

    若保持的分量在块内被吸收，时间仍然流逝，直到下一个块边界。
    """

    kind = StrategyKind.EPSILON_STRATEGY

    def __init__(self, base: Strategy, epsilon: float):
        if not epsilon > 0:
            raise ParameterError("ε 必须为正", parameter="epsilon", value=epsilon)
        if isinstance(base, EpsilonStrategy):
            raise ParameterError("基础策略不能是 ε 策略", parameter="base", value=base.name)
        self.base = base
        self.epsilon = epsilon

    @property
    def name(self) -> str:
        return f"epsilon_strategy({self.base.name},{self.epsilon:g})"

    def choose(self, summary: HistorySummary) -> np.ndarray:
        at_boundary = (summary.step_count % _block_steps(self.epsilon, summary.step) == 0) | (summary.previous < 0)
        base_choice = self.base.choose(summary)
        return np.where(at_boundary, base_choice, summary.previous)


def choose_index(strategy: Strategy, state: TripleState, history_summary: HistorySummary | None = None) -> int:
    """选择下一步运行的分量（1..3）

    Args:
        strategy: 分配策略
        state: 当前状态
        history_summary: 历史摘要，缺省时视为初始时刻

    Returns:
        int: 分量下标 1..3

    Raises:
        NoDecisionNeededError: 状态已在 D 中
    """
    if state.in_decision_set:
        raise NoDecisionNeededError(state=state.values)
    summary = history_summary or HistorySummary.initial(state.as_array(), step=1.0)
    decided, _ = decision_mask(summary.states)
    if decided.any():
        raise NoDecisionNeededError(state=state.values)
    return int(strategy.choose(summary)[0]) + 1


def strategy_from_config(config: "StrategyConfig") -> Strategy:
    """由实验配置中的 strategy 段构造策略"""
    kind = StrategyKind(config.kind)
    if kind is StrategyKind.RUN_THE_MIDDLE:
        return RunTheMiddle()
    if kind is StrategyKind.RUN_TWO_THEN_THIRD:
        return RunTwoThenThird(tuple(config.pair))  # type: ignore[arg-type]
    if kind is StrategyKind.ROUND_ROBIN:
        return RoundRobin(config.block)
    if kind is StrategyKind.RUN_EXTREME:
        return RunExtreme(ExtremeKind(config.which))
    if config.epsilon is None:
        raise ParameterError("ε 策略需要 epsilon", parameter="epsilon", value=None)
    base = config.model_copy(update={"kind": config.base, "epsilon": None})
    return EpsilonStrategy(strategy_from_config(base), config.epsilon)
