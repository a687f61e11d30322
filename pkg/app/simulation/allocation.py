"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: allocation.py
@DateTime: 2025/06/23 13:10:00
@Docs: 时间分配记录、分配公理检查与 ε 离散化
"""

import math
from dataclasses import dataclass

import numpy as np

from app.core.config import settings
from app.core.enums import DiscretizeRule
from app.core.exceptions import NumericalError, ParameterError


@dataclass
class AllocationRecord:
    """分段线性的时间分配 C(t)

    breakpoints 从 0 开始严格递增；cumulative[k] 是 C(breakpoints[k])，两点之间线性。
    超出最后一个断点时 C 保持不变。
    """

    breakpoints: np.ndarray
    cumulative: np.ndarray

    @classmethod
    def from_rates(cls, breakpoints: np.ndarray | list[float], rates: np.ndarray | list[list[float]]) -> "AllocationRecord":
        """由每段的速率向量构造"""
        times = np.asarray(breakpoints, dtype=float)
        rate_arr = np.asarray(rates, dtype=float).reshape(-1, 3)
        if rate_arr.shape[0] != times.size - 1:
            raise ParameterError("速率段数必须比断点少一", parameter="rates", value=rate_arr.shape)
        increments = rate_arr * np.diff(times)[:, None]
        cumulative = np.vstack([np.zeros(3), np.cumsum(increments, axis=0)])
        return cls(breakpoints=times, cumulative=cumulative)

    @classmethod
    def from_choices(cls, times: np.ndarray, choices: np.ndarray) -> "AllocationRecord":
        """由路径时间与每段运行的分量（0..2）构造"""
        times = np.asarray(times, dtype=float)
        rates = np.zeros((times.size - 1, 3))
        rates[np.arange(times.size - 1), np.asarray(choices[: times.size - 1], dtype=int)] = 1.0
        return cls.from_rates(times, rates)

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def rates(self) -> np.ndarray:
        return np.diff(self.cumulative, axis=0) / np.diff(self.breakpoints)[:, None]

    def at(self, t: float | np.ndarray) -> np.ndarray:
        """在时刻 t 处取值，t 为数组时返回 (len(t), 3)"""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        values = np.column_stack([np.interp(t_arr, self.breakpoints, self.cumulative[:, i]) for i in range(3)])
        return values[0] if np.ndim(t) == 0 else values

    def validate(self, tol: float | None = None) -> None:
        """检查分配公理：C(0)=0、非降、分量和等于 t、1-Lipschitz

        Raises:
            NumericalError: 任一公理不满足
        """
        tol = settings.ALLOCATION_TOL if tol is None else tol
        times = self.breakpoints
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise NumericalError("断点必须从 0 开始严格递增")
        if np.any(np.abs(self.cumulative[0]) > tol):
            raise NumericalError("C(0) 必须为 0", detail={"c0": self.cumulative[0].tolist()})

        increments = np.diff(self.cumulative, axis=0)
        if np.any(increments < -tol):
            k, i = np.argwhere(increments < -tol)[0]
            raise NumericalError("分配必须非降", detail={"segment": int(k), "component": int(i) + 1})

        total_gap = np.abs(self.cumulative.sum(axis=1) - times)
        if np.any(total_gap > tol * max(1, times.size)):
            k = int(np.argmax(total_gap))
            raise NumericalError(
                "分量和必须等于日历时间",
                detail={"breakpoint": float(times[k])},
                residual=float(total_gap[k]),
            )

        durations = np.diff(times)[:, None]
        if np.any(increments > durations + tol):
            raise NumericalError("分配违反 1-Lipschitz 条件")


def check_allocation_axioms(record: AllocationRecord, tol: float | None = None) -> None:
    """C1/C2/Lipschitz 公理检查，违反时抛出 NumericalError"""
    record.validate(tol)


def _demand_time(record: AllocationRecord, component: int, level: float, tol: float) -> float:
    """C_i 首次超过 level 的时刻，从不超过返回 inf"""
    column = record.cumulative[:, component]
    target = level + tol
    j = int(np.searchsorted(column, target, side="left"))
    if j >= column.size:
        return math.inf
    if j == 0:
        return 0.0
    c0, c1 = column[j - 1], column[j]
    t0, t1 = record.breakpoints[j - 1], record.breakpoints[j]
    return float(t0 + (target - c0) / (c1 - c0) * (t1 - t0))


def _lowest_within(values: np.ndarray, best: float, tol: float) -> int:
    return int(np.flatnonzero(np.abs(values - best) <= tol)[0])


def epsilon_discretize(
    record: AllocationRecord,
    epsilon: float,
    rule: DiscretizeRule = DiscretizeRule.EARLIEST_DEMAND,
    horizon: float | None = None,
) -> AllocationRecord:
    """把任意分配逼近为 Π_ε 中的分配：每个块 [kε,(k+1)ε) 只运行一个分量

    默认规则为最早未满足需求优先：第 k 块运行使 inf{s: C_i(s) > C^ε_i(kε)} 最小的分量，
    并列取最小下标。该规则按到达顺序逐个服务长度为 ε 的需求，因此
    sup|C - C^ε| <= 2ε 且 C(t) ⪯ C^ε(t + 3ε)。
    LARGEST_DEFICIT 为逐块最大欠额 C_i(kε) - C^ε_i(kε) 规则，仅用于对比。

    Args:
        record: 满足 C1、C2 的分配
        epsilon: 块长
        rule: 块规则
        horizon: 输出覆盖的时长，缺省为 record 的时长

    Returns:
        AllocationRecord: 断点为 kε 的分配
    """
    if not epsilon > 0:
        raise ParameterError("ε 必须为正", parameter="epsilon", value=epsilon)
    rule = DiscretizeRule(rule)
    check_allocation_axioms(record)

    end = record.horizon if horizon is None else horizon
    n_blocks = max(1, math.ceil(end / epsilon - 1e-9))
    demand_tol = 1e-12
    level = np.zeros(3)
    chosen = np.empty(n_blocks, dtype=int)
    final = record.cumulative[-1]

    for k in range(n_blocks):
        if rule is DiscretizeRule.LARGEST_DEFICIT:
            deficit = record.at(k * epsilon) - level
            i = _lowest_within(deficit, float(deficit.max()), 1e-12 * max(1.0, k * epsilon))
        else:
            demand = np.array([_demand_time(record, c, level[c], demand_tol) for c in range(3)])
            if np.all(np.isinf(demand)):
                surplus = level - final
                i = _lowest_within(surplus, float(surplus.min()), demand_tol)
            else:
                i = _lowest_within(demand, float(demand.min()), demand_tol)
        chosen[k] = i
        level[i] += epsilon

    breakpoints = epsilon * np.arange(n_blocks + 1, dtype=float)
    rates = np.zeros((n_blocks, 3))
    rates[np.arange(n_blocks), chosen] = 1.0
    return AllocationRecord.from_rates(breakpoints, rates)


def sup_deviation(record: AllocationRecord, approx: AllocationRecord) -> float:
    """[0, T] 上的 sup_t ||C(t) - C^ε(t)||_∞，在两者断点的并集上精确计算"""
    knots = np.union1d(record.breakpoints, approx.breakpoints)
    knots = knots[knots <= record.horizon]
    return float(np.max(np.abs(record.at(knots) - approx.at(knots))))


def precedence_violations(
    record: AllocationRecord,
    approx: AllocationRecord,
    lag: float,
    grid_points: int = 4000,
    tol: float = 1e-9,
) -> int:
    """统计 C(t) ⪯ C^ε(t + lag) 在稠密网格上的违反次数（逐分量计数）"""
    if approx.horizon + tol < record.horizon + lag:
        raise ParameterError("逼近分配未覆盖 T + lag", parameter="approx", value=approx.horizon)
    grid = np.union1d(np.linspace(0.0, record.horizon, grid_points), record.breakpoints)
    ahead = record.at(grid) - approx.at(grid + lag)
    return int(np.count_nonzero(ahead > tol))


@dataclass
class EpsilonCheck:
    """一次 ε 逼近检查的结果"""

    epsilon: float
    sup_deviation: float
    violations: int
    bound: float

    @property
    def passed(self) -> bool:
        return self.sup_deviation <= self.bound + 1e-12 and self.violations == 0


def check_epsilon_approximation(
    record: AllocationRecord,
    epsilon: float,
    rule: DiscretizeRule = DiscretizeRule.EARLIEST_DEMAND,
    m: float | None = None,
) -> EpsilonCheck:
    """检查 sup 偏差 <= Mε 与前移 Mε 后的先行关系"""
    m = settings.EPSILON_BOUND_M if m is None else m
    lag = m * epsilon
    approx = epsilon_discretize(record, epsilon, rule=rule, horizon=record.horizon + lag + epsilon)
    return EpsilonCheck(
        epsilon=epsilon,
        sup_deviation=sup_deviation(record, approx),
        violations=precedence_violations(record, approx, lag),
        bound=lag,
    )


def random_allocation_record(
    generator: np.random.Generator,
    horizon: float = 1.0,
    segments: int = 25,
    bang_bang_share: float = 0.5,
) -> AllocationRecord:
    """随机生成满足公理的分配：段长随机，每段为单位向量或单纯形内部速率"""
    durations = (0.9 * generator.dirichlet(np.ones(segments)) + 0.1 / segments) * horizon
    breakpoints = np.concatenate([[0.0], np.cumsum(durations)])
    breakpoints[-1] = horizon
    rates = np.empty((segments, 3))
    for k in range(segments):
        if generator.random() < bang_bang_share:
            rates[k] = np.eye(3)[generator.integers(3)]
        else:
            rates[k] = generator.dirichlet(np.ones(3))
    return AllocationRecord.from_rates(breakpoints, rates)
