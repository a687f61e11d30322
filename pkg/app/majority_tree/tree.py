"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: tree.py
@DateTime: 2025/06/27 15:10:00
@Docs: 递归三数多数树 - 最优期望查询代价、布朗叶子深度一代价与增长率报告
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import polars as pl

from app.core.exceptions import ParameterError, UnsupportedDepthError
from app.utils.logger import logger

MAX_DEPTH = 2
GAMMA_LOWER = 2.25
GAMMA_UPPER = 2.472
UNOBSERVED = -1

# 规范状态：深度 0 为叶子取值 -1/0/1，深度 n 为三个深度 n-1 规范状态的有序元组
State = int | tuple["State", ...]
Number = float | Fraction


def leaf_count(n: int) -> int:
    """深度 n 的叶子数 3ⁿ"""
    if n < 0:
        raise ParameterError("树深度不能为负", parameter="n", value=n)
    return 3**n


def _depth_of(length: int) -> int:
    depth, size = 0, 1
    while size < length:
        size *= 3
        depth += 1
    if size != length or length == 0:
        raise ParameterError("叶子数必须是 3 的幂", parameter="leaves", value=length)
    return depth


def recursive_majority(leaf_values: Sequence[int]) -> int:
    """自底向上逐层取三数多数

    Args:
        leaf_values: 长度为 3ⁿ 的 0/1 序列

    Returns:
        int: 根节点取值
    """
    values = [int(v) for v in leaf_values]
    _depth_of(len(values))
    if any(v not in (0, 1) for v in values):
        raise ParameterError("叶子取值必须为 0 或 1", parameter="leaves", value=tuple(values))
    while len(values) > 1:
        values = [1 if sum(values[k : k + 3]) >= 2 else 0 for k in range(0, len(values), 3)]
    return values[0]


def _nest(leaves: list[int]) -> State:
    if len(leaves) == 1:
        return leaves[0]
    third = len(leaves) // 3
    return tuple(sorted((_nest(leaves[k * third : (k + 1) * third]) for k in range(3)), key=_sort_key))


def _sort_key(state: State) -> tuple:
    return (state,) if isinstance(state, int) else tuple(_sort_key(child) for child in state)


def canonical_state(leaves: Sequence[int | None]) -> State:
    """观测状态的规范签名

    同一子树内的叶子可交换，签名在子树内部排列下不变。None 或 -1 表示未观测。
    """
    values = [UNOBSERVED if v is None else int(v) for v in leaves]
    _depth_of(len(values))
    if any(v not in (UNOBSERVED, 0, 1) for v in values):
        raise ParameterError("叶子状态必须为未观测、0 或 1", parameter="leaves", value=tuple(values))
    return _nest(values)


def determined_value(state: State) -> int | None:
    """已观测叶子能否确定该节点取值，能则返回取值"""
    if isinstance(state, int):
        return None if state == UNOBSERVED else state
    children = [determined_value(child) for child in state]
    if children.count(1) >= 2:
        return 1
    if children.count(0) >= 2:
        return 0
    return None


def _queries(state: State) -> list[tuple[State, State]]:
    """所有值得查询的未观测叶子，返回查询结果为 1 与为 0 时的后继规范状态

    已确定的子树中的叶子不影响根节点，不作为候选。
    """
    if isinstance(state, int):
        return [(1, 0)] if state == UNOBSERVED else []
    if determined_value(state) is not None:
        return []
    moves: dict[tuple[State, State], None] = {}
    for k, child in enumerate(state):
        for one, zero in _queries(child):
            siblings = state[:k] + state[k + 1 :]
            after_one = tuple(sorted((*siblings, one), key=_sort_key))
            after_zero = tuple(sorted((*siblings, zero), key=_sort_key))
            moves[(after_one, after_zero)] = None
    return list(moves)


class _CostSolver:
    """在规范状态上做带记忆的期望代价动态规划"""

    def __init__(self, p: Number):
        self.p = p
        self.q = 1 - p
        self.memo: dict[State, Number] = {}

    def value(self, state: State) -> Number:
        if state in self.memo:
            return self.memo[state]
        moves = _queries(state)
        if not moves:
            result: Number = 0
        else:
            result = min(1 + self.p * self.value(one) + self.q * self.value(zero) for one, zero in moves)
        self.memo[state] = result
        return result


@dataclass
class CostTable:
    """深度 n、叶子 Bernoulli(p) 时最优自适应策略的期望查询次数"""

    p: float
    depth: int
    cost: float
    exact: Fraction | None = field(default=None, compare=False)

    @property
    def growth_rate(self) -> float:
        return self.cost ** (1.0 / self.depth)

    @property
    def within_trivial_bounds(self) -> bool:
        return 2**self.depth - 1e-12 <= self.cost <= 3**self.depth + 1e-12


def optimal_cost(n: int, p: float | Fraction, exact: bool = False) -> CostTable:
    """深度 n 多数树的最优期望查询代价 r_n

    Args:
        n: 树深度，仅支持 1 与 2
        p: 叶子取 1 的概率
        exact: 为 True 时用有理数运算，p 按十进制字面值转为 Fraction

    Raises:
        UnsupportedDepthError: n > 2
    """
    if n > MAX_DEPTH:
        raise UnsupportedDepthError(n, MAX_DEPTH)
    if n < 1:
        raise ParameterError("树深度至少为 1", parameter="n", value=n)
    if not 0 < p < 1:
        raise ParameterError("p 必须位于 (0,1)", parameter="p", value=p)

    prob: Number = (p if isinstance(p, Fraction) else Fraction(str(p))) if exact else float(p)
    solver = _CostSolver(prob)
    root = canonical_state([None] * leaf_count(n))
    cost = solver.value(root)
    logger.debug(f"多数树代价: n={n}, p={p}, 状态数={len(solver.memo)}", cost=float(cost))
    return CostTable(p=float(p), depth=n, cost=float(cost), exact=cost if isinstance(cost, Fraction) else None)


def r1(p: float) -> float:
    """深度一的最优代价 2(1 + p(1-p))"""
    return 2.0 * (1.0 + p * (1.0 - p))


def brownian_depth1_cost(p: float) -> float:
    """叶子换成布朗运动（单个叶子期望吸收时间归一化为 1）时深度一的期望时间代价

    R₁(p) = -(6/(p(1-p)))(p(1-p) + p²ln p + (1-p)²ln(1-p))，p∈{0,1} 时按连续性取 0。
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError("p 必须位于 [0,1]", parameter="p", value=p)
    if p in (0.0, 1.0):
        return 0.0
    q = 1.0 - p
    return -(6.0 / (p * q)) * (p * q + p * p * math.log(p) + q * q * math.log(q))


@dataclass
class GammaReport:
    """各深度的 r_n^{1/n}、次乘性检查与已知的 γ 区间"""

    p: float
    rates: dict[int, float]
    sub_multiplicative: bool | None
    bracket: tuple[float, float] = (GAMMA_LOWER, GAMMA_UPPER)


def gamma_report(costs: Sequence[CostTable]) -> GammaReport:
    """汇总同一 p 下各深度的代价

    只报告区间，不断言有限深度的增长率落在其中。
    """
    if not costs:
        raise ParameterError("至少需要一个深度的代价", parameter="costs", value=0)
    p = costs[0].p
    if any(c.p != p for c in costs):
        raise ParameterError("代价表的 p 不一致", parameter="costs", value=[c.p for c in costs])
    by_depth = {c.depth: c for c in costs}
    flag = None
    if 1 in by_depth and 2 in by_depth:
        first, second = by_depth[1], by_depth[2]
        if first.exact is not None and second.exact is not None:
            flag = second.exact <= first.exact**2
        else:
            flag = second.cost <= first.cost**2 + 1e-12
    return GammaReport(p=p, rates={d: c.growth_rate for d, c in sorted(by_depth.items())}, sub_multiplicative=flag)


def cost_table(p_grid: Sequence[float], depths: Sequence[int] = (1, 2), exact: bool = False) -> pl.DataFrame:
    """逐个 p 计算各深度代价，列 p, depth, r_n, r_n^{1/n}, R1, bound_ok

    bound_ok 要求 2ⁿ ≤ r_n ≤ 3ⁿ、R₁ ≤ r₁，深度二时还要求 r₂ ≤ r₁²。
    """
    rows = []
    for p in p_grid:
        tables = [optimal_cost(n, p, exact=exact) for n in depths]
        brownian = brownian_depth1_cost(float(p))
        report = gamma_report(tables)
        for table in tables:
            ok = table.within_trivial_bounds and brownian <= r1(float(p))
            if table.depth == 2 and report.sub_multiplicative is not None:
                ok = ok and report.sub_multiplicative
            rows.append(
                {
                    "p": float(p),
                    "depth": table.depth,
                    "r_n": table.cost,
                    "r_n^{1/n}": table.growth_rate,
                    "R1": brownian,
                    "bound_ok": ok,
                }
            )
    schema = {
        "p": pl.Float64,
        "depth": pl.Int64,
        "r_n": pl.Float64,
        "r_n^{1/n}": pl.Float64,
        "R1": pl.Float64,
        "bound_ok": pl.Boolean,
    }
    return pl.DataFrame(rows, schema=schema)
