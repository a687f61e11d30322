"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: perturbed.py
@DateTime: 2025/06/24 10:00:00
@Docs: 双重扰动布朗运动仿真及其与居中过程的对应
"""

import math
from dataclasses import dataclass, field

import numpy as np

from app.core.enums import ExitSide
from app.core.exceptions import MissingDataError, NumericalError, OutOfDomainError, ParameterError
from app.simulation.controlled import ControlledBatch
from app.simulation.diffusion import CoefficientFn, ExitBatch, ExitSample, bridge_crossings
from app.simulation.rng import RngStream
from app.simulation.state import TripleState


def _unit_sigma(x: np.ndarray) -> np.ndarray:
    return np.ones(np.shape(x), dtype=float)


@dataclass(frozen=True)
class PerturbedSpec:
    """M' = B' + α(sup M' - s0')⁺ - β(inf M' + i0')⁻

    gap 取 math.inf 表示该侧无扰动。dB' = sigma(M' + origin)dW，origin 为原坐标下的起点。
    """

    alpha: float = -1.0
    beta: float = -1.0
    i0_prime: float = math.inf
    s0_prime: float = math.inf
    sigma: CoefficientFn = field(default=_unit_sigma, compare=False)
    origin: float = 0.0

    def __post_init__(self) -> None:
        if not (self.alpha < 1.0 and self.beta < 1.0):
            raise OutOfDomainError("扰动参数需满足 α < 1 且 β < 1", alpha=self.alpha, beta=self.beta)
        for name, gap in (("i0_prime", self.i0_prime), ("s0_prime", self.s0_prime)):
            if math.isnan(gap) or gap < 0:
                raise ParameterError("初始间隔必须非负", parameter=name, value=gap)

    @property
    def is_middle_process(self) -> bool:
        return self.alpha == -1.0 and self.beta == -1.0


def dpbm_parameters(x0: TripleState) -> tuple[PerturbedSpec, tuple[float, float]]:
    """三元组 (i0, m0, s0) 对应的扰动参数与出界区间 (-m0, 1-m0)"""
    if x0.in_decision_set:
        raise ParameterError("起点已在决策集", parameter="x0", value=x0.values)
    i0, m0, s0 = x0.sorted()
    pspec = PerturbedSpec(i0_prime=m0 - i0, s0_prime=s0 - m0, origin=m0)
    return pspec, (-m0, 1.0 - m0)


def _check_interval(interval: tuple[float, float]) -> tuple[float, float]:
    lower, upper = float(interval[0]), float(interval[1])
    if not lower < 0.0 < upper:
        raise ParameterError("出界区间需满足 -a < 0 < b", parameter="exit_interval", value=interval)
    return lower, upper


def _dpbm_kernel(
    pspec: PerturbedSpec,
    lower: float,
    upper: float,
    step: float,
    generator: np.random.Generator,
    n_paths: int,
    record: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """向量化的扰动布朗运动出界仿真

    top = max(s0', sup M')，bottom = min(-i0', inf M')。M' 不创新高/新低时 M' = B' + c，
    c = α(top - s0') + β(bottom + i0')；创新高时解一步不动点 M' = (B' - αs0' + β(bottom + i0'))/(1-α)，
    新低对称。越界判定在 B' 尺度上做布朗桥修正，阈值经分段线性映射换算。
    """
    alpha, beta = pspec.alpha, pspec.beta
    s_gap, i_gap = pspec.s0_prime, pspec.i0_prime
    has_top, has_bottom = math.isfinite(s_gap), math.isfinite(i_gap)

    m = np.zeros(n_paths)
    b = np.zeros(n_paths)
    top = np.full(n_paths, s_gap if has_top else math.inf)
    bottom = np.full(n_paths, -i_gap if has_bottom else -math.inf)
    sup_m = np.zeros(n_paths)
    inf_m = np.zeros(n_paths)
    times = np.zeros(n_paths)
    exited_upper = np.zeros(n_paths, dtype=bool)
    active = np.arange(n_paths)
    sqrt_dt = math.sqrt(step)
    steps = 0
    path = [(0.0, 0.0, 0.0)] if record else None

    while active.size:
        steps += 1
        m_a, b_a, top_a, bottom_a = m[active], b[active], top[active], bottom[active]
        up_term = top_a - s_gap if has_top else np.zeros(active.size)
        low_term = bottom_a + i_gap if has_bottom else np.zeros(active.size)
        shift = alpha * up_term + beta * low_term

        sig = np.asarray(pspec.sigma(m_a + pspec.origin), dtype=float)
        normals = generator.standard_normal(active.size)
        uniforms = generator.random((active.size, 2))
        b_next = b_a + sig * sqrt_dt * normals

        # 出界阈值换算到 B' 尺度
        up_knot = np.minimum(top_a, upper)
        low_knot = np.maximum(bottom_a, lower)
        b_upper = up_knot - shift + (1.0 - alpha) * (upper - up_knot)
        b_lower = low_knot - shift - (1.0 - beta) * (low_knot - lower)
        hit_low, hit_up = bridge_crossings(b_a, b_next, b_lower, b_upper, sig, step, uniforms)
        exited = hit_low | hit_up

        candidate = b_next + shift
        new_high = candidate > top_a
        new_low = candidate < bottom_a
        m_next = candidate
        if has_top:
            m_next = np.where(new_high, (b_next - alpha * s_gap + beta * low_term) / (1.0 - alpha), m_next)
        if has_bottom:
            m_next = np.where(new_low, (b_next + alpha * up_term + beta * i_gap) / (1.0 - beta), m_next)
        m_next = np.where(hit_low, lower, np.where(hit_up, upper, m_next))

        m[active] = m_next
        b[active] = b_next
        top[active] = np.maximum(top_a, np.where(exited, top_a, m_next))
        bottom[active] = np.minimum(bottom_a, np.where(exited, bottom_a, m_next))
        sup_m[active] = np.maximum(sup_m[active], m_next)
        inf_m[active] = np.minimum(inf_m[active], m_next)
        times[active] += np.where(exited, 0.5 * step, step)
        exited_upper[active] = hit_up

        alive = active[~exited]
        if alive.size:
            expected = b[alive]
            if has_top:
                expected = expected + alpha * np.maximum(sup_m[alive] - s_gap, 0.0)
            if has_bottom:
                expected = expected - beta * np.maximum(-(inf_m[alive] + i_gap), 0.0)
            drift = np.max(np.abs(m[alive] - expected))
            if drift > 1e-10 * steps:
                raise NumericalError("扰动记账恒等式不成立", residual=float(drift), detail={"steps": steps})

        if path is not None:
            path.append((float(times[0]), float(m[0]), float(b[0])))
        active = alive

    return times, exited_upper, (np.array(path) if path is not None else None)


def simulate_dpbm(
    pspec: PerturbedSpec,
    step: float,
    rng: RngStream,
    exit_interval: tuple[float, float],
    record_path: bool = False,
) -> ExitSample:
    """扰动布朗运动从 0 出发离开 (-a, b) 的时刻

    Args:
        pspec: 扰动参数
        step: 时间步长
        rng: 随机数流
        exit_interval: (-a, b)，-a < 0 < b
        record_path: 是否记录路径，记录列为时间、M'、B'

    Returns:
        ExitSample: 出界时间与方向
    """
    if not step > 0:
        raise ParameterError("步长必须为正", parameter="step", value=step)
    lower, upper = _check_interval(exit_interval)
    times, exited_upper, path = _dpbm_kernel(pspec, lower, upper, step, rng.generator(), 1, record_path)
    side = ExitSide.UPPER if exited_upper[0] else ExitSide.LOWER
    return ExitSample(exit_time=float(times[0]), exit_side=side, path=path)


def simulate_dpbm_batch(
    pspec: PerturbedSpec,
    step: float,
    rng: RngStream,
    n_paths: int,
    exit_interval: tuple[float, float],
) -> ExitBatch:
    """simulate_dpbm 的批量版本"""
    if not step > 0:
        raise ParameterError("步长必须为正", parameter="step", value=step)
    if n_paths < 1:
        raise ParameterError("路径数必须至少为 1", parameter="n_paths", value=n_paths)
    lower, upper = _check_interval(exit_interval)
    times, exited_upper, _ = _dpbm_kernel(pspec, lower, upper, step, rng.generator(), n_paths)
    return ExitBatch(times=times, upper=exited_upper)


def middle_exit_times(batch: ControlledBatch) -> np.ndarray:
    """居中策略的决策时间，即居中过程离开 (0,1) 的时刻"""
    if batch.censor_count:
        raise MissingDataError("存在删失路径，无法得到完整的出界时间", detail={"censored": batch.censor_count})
    return batch.times.copy()
