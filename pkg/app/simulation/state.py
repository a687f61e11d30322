"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: state.py
@DateTime: 2025/06/23 11:00:00
@Docs: 三元状态与决策集 D
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from app.core.exceptions import ParameterError


@dataclass(frozen=True)
class TripleState:
    """[0,1]³ 中的一点，端点即吸收"""

    x1: float
    x2: float
    x3: float

    def __post_init__(self) -> None:
        for name, value in (("x1", self.x1), ("x2", self.x2), ("x3", self.x3)):
            if not 0.0 <= value <= 1.0:
                raise ParameterError("状态分量必须位于 [0,1]", parameter=name, value=value)

    @classmethod
    def of(cls, values: Sequence[float]) -> "TripleState":
        if len(values) != 3:
            raise ParameterError("状态必须有三个分量", parameter="x", value=tuple(values))
        return cls(float(values[0]), float(values[1]), float(values[2]))

    @property
    def values(self) -> tuple[float, float, float]:
        return (self.x1, self.x2, self.x3)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    @property
    def absorbed(self) -> tuple[bool, bool, bool]:
        return tuple(v in (0.0, 1.0) for v in self.values)  # type: ignore[return-value]

    @property
    def in_decision_set(self) -> bool:
        return in_decision_set(self.values)

    @property
    def decision_value(self) -> int | None:
        """已决策时返回多数值，否则 None"""
        ones = sum(v == 1.0 for v in self.values)
        zeros = sum(v == 0.0 for v in self.values)
        if ones >= 2:
            return 1
        if zeros >= 2:
            return 0
        return None

    def sorted(self) -> tuple[float, float, float]:
        low, mid, high = sorted(self.values)
        return (low, mid, high)


def in_decision_set(x: Sequence[float]) -> bool:
    """两个分量同时位于同一端点"""
    values = list(x)
    return sum(v == 1.0 for v in values) >= 2 or sum(v == 0.0 for v in values) >= 2


def decision_mask(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """批量判定决策集

    Args:
        states: (n, 3) 状态数组

    Returns:
        (是否在 D 中, 决策值)，未决策的行决策值为 -1
    """
    ones = np.count_nonzero(states >= 1.0, axis=1)
    zeros = np.count_nonzero(states <= 0.0, axis=1)
    decided = (ones >= 2) | (zeros >= 2)
    value = np.where(ones >= 2, 1, np.where(zeros >= 2, 0, -1))
    return decided, value


def decision_value_probability(x0: TripleState | Sequence[float]) -> float:
    """三个独立零漂移扩散的多数吸收于 1 的概率

    x1x2 + x1x3 + x2x3 - 2x1x2x3，与分配策略无关。
    """
    x1, x2, x3 = x0.values if isinstance(x0, TripleState) else TripleState.of(x0).values
    return x1 * x2 + x1 * x3 + x2 * x3 - 2.0 * x1 * x2 * x3
