"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: value_function.py
@DateTime: 2025/06/25 10:30:00
@Docs: 居中策略的 Laplace 值函数 v̂ 及其派生量
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from app.analytics.eigen import EigenPair, solve_eigenpair, two_sided_transform, two_sided_transform_array
from app.core.config import settings
from app.core.enums import ExpectedTimeMethod
from app.core.exceptions import ExtrapolationError, NumericalError, ParameterError, QuadratureError
from app.simulation.diffusion import DiffusionSpec
from app.simulation.state import TripleState
from app.utils.logger import logger


@lru_cache(maxsize=256)
def _cached_eigenpair(spec: DiffusionSpec, r: float) -> EigenPair:
    return solve_eigenpair(spec, r)


@dataclass(frozen=True, eq=False)
class ValueContext:
    """值函数计算上下文：扩散模型、特征函数缓存与积分参数

    同一上下文对同一 r 只求解一次特征函数对。
    """

    spec: DiffusionSpec = field(default_factory=DiffusionSpec.brownian)
    epsabs: float = field(default_factory=lambda: settings.QUAD_EPSABS)
    epsrel: float = field(default_factory=lambda: settings.QUAD_EPSREL)
    limit: int = field(default_factory=lambda: settings.QUAD_LIMIT)
    target: float = field(default_factory=lambda: settings.QUAD_TARGET)

    def __post_init__(self) -> None:
        self.spec.require_zero_drift()

    def eigen(self, r: float) -> EigenPair:
        return _cached_eigenpair(self.spec, float(r))

    def sigma(self, u: float | np.ndarray) -> float | np.ndarray:
        value = np.asarray(self.spec.sigma(np.asarray(u, dtype=float)), dtype=float)
        return float(value) if value.ndim == 0 else value

    def integrate(self, fn: Callable[[float], float], a: float, b: float) -> float:
        """自适应 Gauss-Kronrod 积分，误差估计超过 target 时报错"""
        if b <= a:
            return 0.0
        value, error, *_ = integrate.quad(
            fn, a, b, epsabs=self.epsabs, epsrel=self.epsrel, limit=self.limit, full_output=1
        )
        if not np.isfinite(value) or error > self.target * max(1.0, abs(value)):
            raise QuadratureError(f"积分 [{a}, {b}] 未达到误差目标", error_estimate=float(error), target=self.target)
        return float(value)


def _as_state(x: TripleState | Sequence[float]) -> TripleState:
    return x if isinstance(x, TripleState) else TripleState.of(x)


def _check_rate(r: float) -> None:
    if not r > 0:
        raise ParameterError("折现率必须为正", parameter="r", value=r)


def fhat(i: int, x: TripleState | Sequence[float], r: float, ctx: ValueContext) -> float:
    """停止分量 i 后、其余两个分量按居中策略运行时的 Laplace 值

    Args:
        i: 分量编号 1..3
        x: 状态
        r: 折现率
        ctx: 计算上下文

    Returns:
        float: 最小分量用 h⁺ 乘积，最大分量用 h⁻ 乘积，中间分量为 0；x∈D 时为 1
    """
    _check_rate(r)
    if i not in (1, 2, 3):
        raise ParameterError("分量编号必须为 1..3", parameter="i", value=i)
    state = _as_state(x)
    if state.in_decision_set:
        return 1.0

    order = sorted(range(3), key=lambda k: state.values[k])
    rank = order.index(i - 1)
    x1, x2, x3 = state.sorted()
    eigen = ctx.eigen(r)
    if rank == 0:
        return two_sided_transform(eigen, x1, 1.0, x2)[0] * two_sided_transform(eigen, x1, 1.0, x3)[0]
    if rank == 2:
        return two_sided_transform(eigen, 0.0, x3, x1)[1] * two_sided_transform(eigen, 0.0, x3, x2)[1]
    return 0.0


def fhat_array(i: int, states: np.ndarray, r: float, ctx: ValueContext) -> np.ndarray:
    """fhat 的向量化版本，states 为 (n, 3) 数组，分量 i 的名次逐行确定"""
    states = np.asarray(states, dtype=float)
    eigen = ctx.eigen(r)
    ordered = np.sort(states, axis=1)
    x1, x2, x3 = ordered[:, 0], ordered[:, 1], ordered[:, 2]
    ones = np.count_nonzero(states >= 1.0, axis=1)
    zeros = np.count_nonzero(states <= 0.0, axis=1)
    decided = (ones >= 2) | (zeros >= 2)
    own = states[:, i - 1]
    # 并列时按最小分量处理
    is_low = (own == x1) & ~decided
    is_high = (own == x3) & ~is_low & ~decided
    result = np.zeros(states.shape[0])

    if np.any(is_low):
        a = x1[is_low]
        p2, _ = two_sided_transform_array(eigen, a, 1.0, x2[is_low])
        p3, _ = two_sided_transform_array(eigen, a, 1.0, x3[is_low])
        result[is_low] = p2 * p3
    if np.any(is_high):
        b = x3[is_high]
        _, m1 = two_sided_transform_array(eigen, 0.0, b, x1[is_high])
        _, m2 = two_sided_transform_array(eigen, 0.0, b, x2[is_high])
        result[is_high] = m1 * m2

    result[decided] = 1.0
    return result


def lambda_pm(x1: float, x3: float, r: float, ctx: ValueContext) -> tuple[float, float]:
    """给定最小值 x1 与最大值 x3 时 v̂ 在中间坐标上的组合系数 (λ⁻, λ⁺)

    v̂(x1, u, x3) = λ⁻·h⁻(u) + λ⁺·h⁺(u)，系数由 x1、x3 两侧的光滑粘合条件确定。
    """
    _check_rate(r)
    if not 0.0 <= x1 <= x3 <= 1.0:
        raise ParameterError("需要 0 <= x1 <= x3 <= 1", parameter="x", value=(x1, x3))
    eigen = ctx.eigen(r)
    hm, hp = eigen.h_minus, eigen.h_plus
    hmp, hpp = eigen.h_minus_prime, eigen.h_plus_prime
    sigma = ctx.sigma

    hm1, hp1, hm3, hp3 = float(hm(x1)), float(hp(x1)), float(hm(x3)), float(hp(x3))

    lower_ratio = ctx.integrate(lambda u: float(hpp(u)) / float(hm(u)) ** 2, 0.0, x1)
    upper_ratio = ctx.integrate(lambda u: float(hmp(u)) / float(hp(u)) ** 2, x3, 1.0)
    lower_kernel = ctx.integrate(
        lambda u: (float(hp(u)) / (sigma(u) * float(hm(u)))) ** 2 * (hm1 * float(hp(u)) - float(hm(u)) * hp1),
        0.0,
        x1,
    )
    upper_kernel = ctx.integrate(
        lambda u: (float(hm(u)) / (sigma(u) * float(hp(u)))) ** 2 * (float(hm(u)) * hp3 - hm3 * float(hp(u))),
        x3,
        1.0,
    )

    coupling = hm1 * hp3
    lam_minus = hm1 - hp1 * hp3 * upper_ratio + coupling * lower_ratio + 2.0 * r * hm3 / eigen.phi * lower_kernel
    lam_plus = hp3 + hm1 * hm3 * lower_ratio - coupling * upper_ratio + 2.0 * r * hp1 / eigen.phi * upper_kernel
    return lam_minus, lam_plus


def vhat(x: TripleState | Sequence[float], r: float, ctx: ValueContext) -> float:
    """居中策略决策时间的 Laplace 变换 E[e^{-rτ}]

    Args:
        x: 状态，与分量顺序无关
        r: 折现率
        ctx: 计算上下文

    Returns:
        float: (0,1] 中的值，x∈D 时为 1

    Raises:
        NumericalError: 结果越出 (0,1]
    """
    _check_rate(r)
    state = _as_state(x)
    if state.in_decision_set:
        return 1.0
    x1, x2, x3 = state.sorted()
    lam_minus, lam_plus = lambda_pm(x1, x3, r, ctx)
    eigen = ctx.eigen(r)
    value = lam_minus * float(eigen.h_minus(x2)) + lam_plus * float(eigen.h_plus(x2))
    if not 0.0 < value <= 1.0 + 1e-9:
        raise NumericalError("值函数越出 (0,1]", detail={"x": state.values, "r": r, "value": value})
    return min(value, 1.0)


def closed_form_expected_time(x: TripleState | Sequence[float]) -> float:
    """布朗运动下居中策略期望决策时间的闭式表达

    G(u)=u(1-u)，I_k=∫_0^{x1} G/(1-u)^k，J_k=∫_{x3}^1 G/u^k。
    """
    state = _as_state(x)
    if state.in_decision_set:
        return 0.0
    x1, x2, x3 = state.sorted()
    ctx = ValueContext()

    def g(u: float) -> float:
        return u * (1.0 - u)

    i3 = ctx.integrate(lambda u: g(u) / (1.0 - u) ** 3, 0.0, x1)
    i4 = ctx.integrate(lambda u: g(u) / (1.0 - u) ** 4, 0.0, x1)
    j3 = ctx.integrate(lambda u: g(u) / u**3, x3, 1.0)
    j4 = ctx.integrate(lambda u: g(u) / u**4, x3, 1.0)
    y1, y2, y3 = 1.0 - x1, 1.0 - x2, 1.0 - x3

    value = g(x2)
    value += g(x1) / y1**2 * (y2 * (y1 - y3) + y1 * y3)
    value += -2.0 * i3 * (y2 * (y1 + y3) + y1 * y3) + 6.0 * i4 * y2 * y1 * y3
    value += g(x3) / x3**2 * (x2 * (x3 - x1) + x1 * x3)
    value += -2.0 * j3 * (x2 * (x3 + x1) + x1 * x3) + 6.0 * j4 * x1 * x2 * x3
    return value


def expected_decision_time(
    x: TripleState | Sequence[float],
    ctx: ValueContext,
    method: ExpectedTimeMethod = ExpectedTimeMethod.RICHARDSON,
) -> float:
    """居中策略的期望决策时间 E[τ] = lim_{r→0} (1 - v̂)/r

    Args:
        x: 状态
        ctx: 计算上下文
        method: richardson 为三级 Richardson 外推；closed_form 仅适用于标准布朗运动

    Raises:
        ExtrapolationError: 外推各级结果不一致
    """
    state = _as_state(x)
    if state.in_decision_set:
        return 0.0
    if method == ExpectedTimeMethod.CLOSED_FORM:
        if not ctx.spec.unit_volatility:
            raise ParameterError("闭式期望时间只适用于 sigma≡1", parameter="method", value=method.value)
        return closed_form_expected_time(state)

    r0 = settings.RICHARDSON_R0
    rates = (r0, r0 / 2.0, r0 / 4.0)
    g = [(1.0 - vhat(state, r, ctx)) / r for r in rates]
    first = 2.0 * g[1] - g[0]
    second = 2.0 * g[2] - g[1]
    result = (4.0 * second - first) / 3.0
    if not np.isfinite(result) or result < 0 or abs(result - second) > 1e-3 * max(1.0, abs(result)):
        raise ExtrapolationError(detail={"x": state.values, "levels": g, "first": first, "second": second})
    logger.debug(f"期望决策时间外推完成: {result:.6g}", x=state.values)
    return result
