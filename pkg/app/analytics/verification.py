"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: verification.py
@DateTime: 2025/06/25 15:00:00
@Docs: 值函数的验证量 - PDE 残差、光滑粘合、生存曲线 Laplace 对照、表示恒等式
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from app.analytics.value_function import ValueContext, fhat, fhat_array, vhat
from app.core.config import settings
from app.core.exceptions import ParameterError, StencilPlacementError
from app.simulation.diffusion import bridge_crossings
from app.simulation.rng import RngStream
from app.simulation.state import TripleState
from app.simulation.statistics import laplace_of_survival
from app.utils.common_utils import standard_error
from app.utils.logger import logger


def _as_state(x: TripleState | Sequence[float]) -> TripleState:
    return x if isinstance(x, TripleState) else TripleState.of(x)


def _shifted(state: TripleState, i: int, offset: float) -> tuple[float, float, float]:
    values = list(state.values)
    values[i - 1] += offset
    return (values[0], values[1], values[2])


def stencil_spacing(x: TripleState | Sequence[float], i: int, delta: float) -> float:
    """分量 i 的差分步长上限：不越过其余分量，也不触及端点

    返回 min(delta, 可用间距的一半)。
    """
    state = _as_state(x)
    own = state.values[i - 1]
    room = [own, 1.0 - own] + [abs(own - v) for k, v in enumerate(state.values) if k != i - 1]
    return min(delta, 0.5 * min(room))


def pde_residual(
    x: TripleState | Sequence[float],
    r: float,
    i: int,
    ctx: ValueContext,
    delta: float | None = None,
) -> float:
    """½sigma²(x_i)∂²_i v̂ - r v̂ + r f̂ⁱ 的中心差分值

    Args:
        x: 不在 D 中的状态
        r: 折现率
        i: 求导分量 1..3
        ctx: 计算上下文
        delta: 差分步长，默认 FD_SECOND_SPACING

    Raises:
        StencilPlacementError: 模板越过其他分量、决策集或端点
    """
    if i not in (1, 2, 3):
        raise ParameterError("分量编号必须为 1..3", parameter="i", value=i)
    state = _as_state(x)
    d = settings.FD_SECOND_SPACING if delta is None else delta
    if state.in_decision_set:
        raise StencilPlacementError("状态位于决策集", detail={"x": state.values})
    if stencil_spacing(state, i, d) < d:
        raise StencilPlacementError(
            "差分模板越过切换平面或端点", detail={"x": state.values, "component": i, "delta": d}
        )

    center = vhat(state, r, ctx)
    up = vhat(_shifted(state, i, d), r, ctx)
    down = vhat(_shifted(state, i, -d), r, ctx)
    second = (up - 2.0 * center + down) / d**2
    sig = float(ctx.sigma(state.values[i - 1]))
    return 0.5 * sig**2 * second - r * center + r * fhat(i, state, r, ctx)


def smooth_pasting_gap(
    x: TripleState | Sequence[float],
    r: float,
    ctx: ValueContext,
    delta: float | None = None,
) -> float:
    """切换平面上一阶偏导的左右差 max|D⁺v̂ - D⁻v̂|

    对每个与其他分量并列的内部分量，用三点单侧差分分别估计两侧导数。

    Raises:
        StencilPlacementError: 没有并列的内部分量，或模板触及其他分量、端点
    """
    state = _as_state(x)
    d = settings.FD_FIRST_SPACING if delta is None else delta
    values = state.values
    tied = [
        k
        for k in range(3)
        if 0.0 < values[k] < 1.0 and any(values[j] == values[k] for j in range(3) if j != k)
    ]
    if state.in_decision_set or not tied:
        raise StencilPlacementError("状态不在切换平面上", detail={"x": values})

    gap = 0.0
    for k in tied:
        others = [values[j] for j in range(3) if j != k and values[j] != values[k]]
        room = [values[k], 1.0 - values[k]] + [abs(values[k] - v) for v in others]
        if min(room) <= 2.0 * d:
            raise StencilPlacementError("单侧差分模板空间不足", detail={"x": values, "component": k + 1, "delta": d})
        center = vhat(state, r, ctx)
        ahead = [vhat(_shifted(state, k + 1, s * d), r, ctx) for s in (1, 2)]
        behind = [vhat(_shifted(state, k + 1, -s * d), r, ctx) for s in (1, 2)]
        plus = (-3.0 * center + 4.0 * ahead[0] - ahead[1]) / (2 * d)
        minus = (3.0 * center - 4.0 * behind[0] + behind[1]) / (2 * d)
        gap = max(gap, abs(plus - minus))
    return gap


def verification_inequality(
    x: TripleState | Sequence[float],
    r: float,
    ctx: ValueContext,
    delta: float | None = None,
) -> float:
    """max_i (½sigma²∂²_i - r)v̂，最优性要求不超过差分容差

    步长按 stencil_spacing 自动收缩，空间不足 1e-6 的分量跳过。
    """
    state = _as_state(x)
    d = settings.FD_SECOND_SPACING if delta is None else delta
    worst = -math.inf
    for i in (1, 2, 3):
        if state.absorbed[i - 1]:
            continue
        spacing = stencil_spacing(state, i, d)
        if spacing < 1e-6:
            logger.debug(f"分量 {i} 过于接近切换平面，跳过", x=state.values)
            continue
        residual = pde_residual(state, r, i, ctx, delta=spacing)
        worst = max(worst, residual - r * fhat(i, state, r, ctx))
    if worst == -math.inf:
        raise StencilPlacementError("没有可放置差分模板的分量", detail={"x": state.values})
    return worst


@dataclass
class LaplaceCheck:
    """(1 - v̂)/r 与 ∫P(τ>t)e^{-rt}dt 的对照"""

    analytic: float
    empirical: float
    standard_error: float
    tail_bound: float

    @property
    def residual(self) -> float:
        return self.empirical - self.analytic

    @property
    def z_score(self) -> float:
        return self.residual / self.standard_error if self.standard_error > 0 else 0.0


def survival_laplace_check(
    x: TripleState | Sequence[float],
    r: float,
    times: np.ndarray,
    ctx: ValueContext,
    censored: np.ndarray | None = None,
) -> LaplaceCheck:
    """把居中策略决策时间样本的经验生存曲线做 Laplace 积分并与 (1 - v̂)/r 比较

    经验生存曲线的积分精确等于样本的 (1 - e^{-rτ})/r 均值。
    """
    state = _as_state(x)
    if state.in_decision_set:
        return LaplaceCheck(analytic=0.0, empirical=0.0, standard_error=0.0, tail_bound=0.0)
    estimate = laplace_of_survival(times, r, censored)
    analytic = (1.0 - vhat(state, r, ctx)) / r
    if estimate.tail_bound > estimate.standard_error:
        logger.warning("生存曲线在删失时刻截断，偏差上界超过标准误", tail_bound=estimate.tail_bound, r=r)
    return LaplaceCheck(
        analytic=analytic,
        empirical=estimate.value,
        standard_error=estimate.standard_error,
        tail_bound=estimate.tail_bound,
    )


@dataclass
class RepresentationCheck:
    """v̂(x) 与 E[e^{-rρ}v̂(X(ρ)) + r∫_0^ρ f̂ⁱ(X(s))e^{-rs}ds] 的蒙特卡洛对照"""

    vhat: float
    estimate: float
    standard_error: float
    n_paths: int

    @property
    def residual(self) -> float:
        return self.estimate - self.vhat

    @property
    def z_score(self) -> float:
        return self.residual / self.standard_error if self.standard_error > 0 else 0.0


def representation_check(
    x: TripleState | Sequence[float],
    r: float,
    i: int,
    ctx: ValueContext,
    n_paths: int,
    step: float,
    rng: RngStream,
) -> RepresentationCheck:
    """只运行分量 i 直到它被吸收，检验值函数的单分量表示

    Args:
        x: 不在 D 中的状态
        r: 折现率
        i: 运行的分量 1..3，须位于 (0,1)
        ctx: 计算上下文
        n_paths: 路径数
        step: 时间步长
        rng: 随机数流

    Returns:
        RepresentationCheck: 解析值、估计值与标准误
    """
    state = _as_state(x)
    if state.in_decision_set:
        raise ParameterError("状态已位于决策集", parameter="x", value=state.values)
    if i not in (1, 2, 3) or state.absorbed[i - 1]:
        raise ParameterError("运行的分量必须位于 (0,1)", parameter="i", value=i)
    if not step > 0 or n_paths < 1:
        raise ParameterError("步长与路径数必须为正", parameter="step", value=(step, n_paths))

    generator = rng.generator()
    base = state.as_array()
    terminal = {edge: vhat(_shifted(state, i, edge - state.values[i - 1]), r, ctx) for edge in (0.0, 1.0)}

    position = np.full(n_paths, base[i - 1])
    clock = np.zeros(n_paths)
    running = np.zeros(n_paths)
    total = np.zeros(n_paths)
    active = np.arange(n_paths)
    sqrt_dt = math.sqrt(step)
    horizon = settings.CENSOR_HORIZON

    while active.size:
        x_prev = position[active]
        states = np.tile(base, (active.size, 1))
        states[:, i - 1] = x_prev
        payoff = fhat_array(i, states, r, ctx)

        sig = np.asarray(ctx.spec.sigma(x_prev), dtype=float)
        x_next = x_prev + sig * sqrt_dt * generator.standard_normal(active.size)
        low, up = bridge_crossings(x_prev, x_next, 0.0, 1.0, sig, step, generator.random((active.size, 2)))
        exited = low | up
        dt_used = np.where(exited, 0.5 * step, step)

        running[active] += r * payoff * np.exp(-r * clock[active]) * dt_used
        clock[active] += dt_used
        position[active] = np.where(low, 0.0, np.where(up, 1.0, x_next))

        done = active[exited]
        edge_value = np.where(up[exited], terminal[1.0], terminal[0.0])
        total[done] = running[done] + np.exp(-r * clock[done]) * edge_value

        alive = active[~exited]
        over = clock[alive] >= horizon
        total[alive[over]] = running[alive[over]]
        active = alive[~over]

    return RepresentationCheck(
        vhat=vhat(state, r, ctx),
        estimate=float(np.mean(total)),
        standard_error=standard_error(total),
        n_paths=n_paths,
    )
