"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: diffusion.py
@DateTime: 2025/06/23 10:30:00
@Docs: 扩散模型定义、单扩散出界仿真与自然尺度变换
"""

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy import integrate

from app.core.config import settings
from app.core.enums import DiffusionKind, ExitSide
from app.core.exceptions import InvalidSpecError, ParameterError
from app.simulation.rng import RngStream
from app.utils.common_utils import bernoulli_standard_error, standard_error

if TYPE_CHECKING:
    from app.schemas.experiment import DiffusionConfig

CoefficientFn = Callable[[np.ndarray], np.ndarray]


def _constant(value: float) -> CoefficientFn:
    def coefficient(x: np.ndarray) -> np.ndarray:
        return np.full(np.shape(x), value, dtype=float)

    return coefficient


def _interpolated(grid: np.ndarray, values: np.ndarray) -> CoefficientFn:
    def coefficient(x: np.ndarray) -> np.ndarray:
        return np.interp(x, grid, values)

    return coefficient


@dataclass(frozen=True, eq=False)
class DiffusionSpec:
    """三个过程共同满足的 SDE：dX = sigma(X)dB + mu(X)dt

    sigma、mu 以向量化函数表示；eq=False 使实例按身份哈希，可作为缓存键。
    """

    sigma: CoefficientFn
    mu: CoefficientFn
    label: str
    kind: DiffusionKind = DiffusionKind.TABULATED
    zero_drift: bool = True
    unit_volatility: bool = False
    params: dict = field(default_factory=dict)

    @classmethod
    def brownian(cls) -> "DiffusionSpec":
        """标准布朗运动 sigma≡1, mu≡0"""
        return cls(
            sigma=_constant(1.0),
            mu=_constant(0.0),
            label="bm",
            kind=DiffusionKind.BROWNIAN,
            zero_drift=True,
            unit_volatility=True,
        )

    @classmethod
    def constant_drift(cls, drift: float, sigma: float = 1.0) -> "DiffusionSpec":
        """常数系数扩散"""
        if sigma <= 0:
            raise InvalidSpecError("sigma 必须为正", detail={"sigma": sigma}, label="constant-drift")
        return cls(
            sigma=_constant(sigma),
            mu=_constant(drift),
            label=f"constant-drift(c={drift:g}, sigma={sigma:g})",
            kind=DiffusionKind.CONSTANT_DRIFT,
            zero_drift=drift == 0.0,
            unit_volatility=sigma == 1.0,
            params={"drift": drift, "sigma": sigma},
        )

    @classmethod
    def tabulated(
        cls,
        grid: np.ndarray | list[float],
        sigma_values: np.ndarray | list[float],
        mu_values: np.ndarray | list[float] | None = None,
        label: str = "tabulated",
    ) -> "DiffusionSpec":
        """在 [0,1] 网格上给定系数，网格之间线性插值"""
        grid_arr = np.asarray(grid, dtype=float)
        sigma_arr = np.asarray(sigma_values, dtype=float)
        mu_arr = np.zeros_like(grid_arr) if mu_values is None else np.asarray(mu_values, dtype=float)

        if grid_arr.ndim != 1 or grid_arr.size < 2:
            raise InvalidSpecError("网格至少需要两个点", label=label)
        if sigma_arr.shape != grid_arr.shape or mu_arr.shape != grid_arr.shape:
            raise InvalidSpecError("系数表与网格长度不一致", label=label)
        if np.any(np.diff(grid_arr) <= 0):
            raise InvalidSpecError("网格必须严格递增", label=label)
        if grid_arr[0] > 0.0 or grid_arr[-1] < 1.0:
            raise InvalidSpecError("网格必须覆盖 [0,1]", detail={"range": [grid_arr[0], grid_arr[-1]]}, label=label)
        if not np.all(np.isfinite(sigma_arr)) or np.any(sigma_arr <= 0):
            raise InvalidSpecError("sigma 在网格上必须为正", label=label)

        return cls(
            sigma=_interpolated(grid_arr, sigma_arr),
            mu=_interpolated(grid_arr, mu_arr),
            label=label,
            kind=DiffusionKind.TABULATED,
            zero_drift=bool(np.all(mu_arr == 0.0)),
            unit_volatility=bool(np.all(sigma_arr == 1.0)),
            params={"grid": grid_arr.tolist(), "sigma": sigma_arr.tolist(), "mu": mu_arr.tolist()},
        )

    @classmethod
    def from_config(cls, config: "DiffusionConfig") -> "DiffusionSpec":
        """由实验配置中的 diffusion 段构造"""
        kind = DiffusionKind(config.kind)
        if kind is DiffusionKind.BROWNIAN:
            return cls.brownian()
        if kind is DiffusionKind.CONSTANT_DRIFT:
            return cls.constant_drift(config.drift, config.sigma)
        if config.grid is None or config.sigma_values is None:
            raise InvalidSpecError("表格扩散需要 grid 与 sigma_values", label=config.label)
        return cls.tabulated(config.grid, config.sigma_values, config.mu_values, label=config.label or "tabulated")

    def validate(self, points: int | None = None) -> None:
        """在求积网格上检查 sigma 为正且有限"""
        grid = np.linspace(0.0, 1.0, points or settings.NATURAL_SCALE_GRID_POINTS)
        sig = np.asarray(self.sigma(grid), dtype=float)
        if not np.all(np.isfinite(sig)) or np.any(sig <= 0):
            bad = grid[~(np.isfinite(sig) & (sig > 0))]
            raise InvalidSpecError(
                "sigma 在求积网格上非正",
                detail={"first_bad_point": float(bad[0]), "count": int(bad.size)},
                label=self.label,
            )

    def is_symmetric(self, points: int = 1001) -> bool:
        """sigma(u) == sigma(1-u)"""
        grid = np.linspace(0.0, 1.0, points)
        return bool(np.allclose(self.sigma(grid), self.sigma(1.0 - grid), rtol=0.0, atol=1e-14))

    def require_zero_drift(self) -> None:
        if not self.zero_drift:
            raise ParameterError(
                "扩散带有漂移，请先做自然尺度变换",
                parameter="mu",
                value=self.label,
            )


@dataclass(frozen=True)
class ScaleMap:
    """单调尺度函数 s: [0,1] -> [0,1] 及其逆"""

    grid: np.ndarray
    values: np.ndarray

    @classmethod
    def identity(cls) -> "ScaleMap":
        unit = np.array([0.0, 1.0])
        return cls(grid=unit, values=unit)

    def __call__(self, x: float | np.ndarray) -> float | np.ndarray:
        result = np.interp(x, self.grid, self.values)
        return float(result) if np.ndim(result) == 0 else result

    def inverse(self, y: float | np.ndarray) -> float | np.ndarray:
        result = np.interp(y, self.values, self.grid)
        return float(result) if np.ndim(result) == 0 else result


@dataclass
class ExitSample:
    """单条路径的出界记录"""

    exit_time: float
    exit_side: ExitSide
    path: np.ndarray | None = None  # 列：时间、位置；扰动过程另有 B' 列


@dataclass
class ExitBatch:
    """一批路径的出界时间与方向"""

    times: np.ndarray
    upper: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @property
    def mean_time(self) -> float:
        return float(np.mean(self.times))

    @property
    def time_standard_error(self) -> float:
        return standard_error(self.times)

    @property
    def upper_frequency(self) -> float:
        return float(np.mean(self.upper))

    @property
    def upper_standard_error(self) -> float:
        return bernoulli_standard_error(self.upper_frequency, len(self))

    @classmethod
    def concat(cls, batches: list["ExitBatch"]) -> "ExitBatch":
        return cls(
            times=np.concatenate([b.times for b in batches]),
            upper=np.concatenate([b.upper for b in batches]),
        )


def natural_scale(spec: DiffusionSpec, grid_points: int | None = None) -> tuple[DiffusionSpec, ScaleMap]:
    """把带漂移的扩散改写为自然尺度

    s'(x) = exp(-∫_0^x 2mu/sigma^2)，归一化使 s(0)=0, s(1)=1；Y = s(X) 的波动率为 s'(x)sigma(x)。

    Args:
        spec: 原扩散
        grid_points: 求积网格点数

    Returns:
        (零漂移扩散, 尺度函数)

    Raises:
        InvalidSpecError: sigma 在网格上非正
    """
    n = grid_points or settings.NATURAL_SCALE_GRID_POINTS
    spec.validate(n)
    if spec.zero_drift:
        return spec, ScaleMap.identity()

    x = np.linspace(0.0, 1.0, n)
    sig = np.asarray(spec.sigma(x), dtype=float)
    mu = np.asarray(spec.mu(x), dtype=float)

    inner = integrate.cumulative_trapezoid(2.0 * mu / sig**2, x, initial=0.0)
    s_prime = np.exp(-inner)
    s = integrate.cumulative_trapezoid(s_prime, x, initial=0.0)
    total = s[-1]
    s = s / total
    s_prime = s_prime / total
    s[-1] = 1.0

    if np.any(np.diff(s) <= 0):
        raise InvalidSpecError("尺度函数不是严格递增", label=spec.label)

    transformed = DiffusionSpec.tabulated(s, s_prime * sig, label=f"{spec.label}@natural-scale")
    return transformed, ScaleMap(grid=x, values=s)


def exit_upper_probability(spec: DiffusionSpec, x0: float, a: float, b: float) -> float:
    """零漂移扩散从 x0 出发先到 b 的概率 (x0-a)/(b-a)"""
    spec.require_zero_drift()
    if a >= b:
        raise ParameterError("区间左端点必须小于右端点", parameter="interval", value=(a, b))
    if not a <= x0 <= b:
        raise ParameterError("起点不在区间内", parameter="x0", value=x0)
    return (x0 - a) / (b - a)


def expected_exit_time(spec: DiffusionSpec, x0: float, a: float, b: float) -> float:
    """零漂移扩散在 (a,b) 内的期望出界时间，解 ½sigma²f'' = -1, f(a)=f(b)=0

    使用格林函数 G(x,y) = (min(x,y)-a)(b-max(x,y))/(b-a) 与权重 2/sigma² 积分。
    """
    spec.require_zero_drift()
    if a >= b:
        raise ParameterError("区间左端点必须小于右端点", parameter="interval", value=(a, b))
    if not a <= x0 <= b:
        raise ParameterError("起点不在区间内", parameter="x0", value=x0)
    if x0 in (a, b):
        return 0.0

    def integrand(y: float) -> float:
        green = (min(x0, y) - a) * (b - max(x0, y)) / (b - a)
        return green * 2.0 / float(spec.sigma(np.array(y))) ** 2

    value, _ = integrate.quad(
        integrand,
        a,
        b,
        points=[x0],
        epsabs=settings.QUAD_EPSABS,
        epsrel=settings.QUAD_EPSREL,
        limit=settings.QUAD_LIMIT,
    )
    return value


def bridge_crossings(
    x_prev: np.ndarray,
    x_next: np.ndarray,
    a: float | np.ndarray,
    b: float | np.ndarray,
    sig: np.ndarray,
    step: float,
    uniforms: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """判定一步内是否越过下界 a 或上界 b

    终点落在区间外直接判出界；否则按布朗桥穿越概率 exp(-2(x_k-a)(x_{k+1}-a)/(sigma²Δt)) 抽样，
    上界对称。uniforms 形状为 (n, 2)，两列分别用于下界与上界。

    Returns:
        (越过下界, 越过上界)，两者互斥
    """
    below = x_next <= a
    above = x_next >= b
    inside = ~below & ~above
    variance = sig**2 * step
    gap_low = np.maximum((x_prev - a) * (x_next - a), 0.0)
    gap_up = np.maximum((b - x_prev) * (b - x_next), 0.0)
    p_low = np.exp(-2.0 * gap_low / variance)
    p_up = np.exp(-2.0 * gap_up / variance)
    low = below | (inside & (uniforms[:, 0] < p_low))
    up = above | (inside & ~low & (uniforms[:, 1] < p_up))
    return low, up


def _check_step(step: float) -> None:
    if not step > 0:
        raise ParameterError("步长必须为正", parameter="step", value=step)


def _check_interval(interval: tuple[float, float]) -> tuple[float, float]:
    a, b = float(interval[0]), float(interval[1])
    if not 0.0 <= a < b <= 1.0:
        raise ParameterError("区间必须满足 0 <= a < b <= 1", parameter="interval", value=interval)
    return a, b


def _exit_kernel(
    spec: DiffusionSpec,
    x0: np.ndarray,
    a: float,
    b: float,
    step: float,
    generator: np.random.Generator,
    record: bool = False,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """向量化的 Euler–Maruyama 出界仿真核心"""
    x = x0.astype(float).copy()
    t = np.zeros_like(x)
    upper = x >= b
    active = np.flatnonzero((x > a) & (x < b))
    sqrt_dt = np.sqrt(step)
    path = [(0.0, float(x[0]))] if record else None

    while active.size:
        xa = x[active]
        sig = np.asarray(spec.sigma(xa), dtype=float)
        normals = generator.standard_normal(active.size)
        uniforms = generator.random((active.size, 2))
        xn = xa + sig * sqrt_dt * normals

        low, up = bridge_crossings(xa, xn, a, b, sig, step, uniforms)
        exited = low | up
        t[active] += np.where(exited, 0.5 * step, step)
        x[active] = np.where(low, a, np.where(up, b, xn))
        upper[active] = up

        if path is not None:
            path.append((float(t[0]), float(x[0])))
        active = active[~exited]

    return t, upper, (np.array(path) if path is not None else None)


def simulate_to_exit(
    spec: DiffusionSpec,
    x0: float,
    interval: tuple[float, float],
    step: float,
    rng: RngStream,
    record_path: bool = False,
) -> ExitSample:
    """单扩散从 x0 出发直到离开 interval

    Args:
        spec: 零漂移扩散
        x0: 起点
        interval: (a, b) ⊆ [0,1]
        step: 时间步长
        rng: 随机数流
        record_path: 是否记录路径

    Returns:
        ExitSample: 出界时间与方向，起点在边界上时时间为 0
    """
    spec.require_zero_drift()
    _check_step(step)
    a, b = _check_interval(interval)
    if not a <= x0 <= b:
        raise ParameterError("起点不在区间内", parameter="x0", value=x0)

    times, upper, path = _exit_kernel(spec, np.array([x0]), a, b, step, rng.generator(), record_path)
    side = ExitSide.UPPER if upper[0] else ExitSide.LOWER
    return ExitSample(exit_time=float(times[0]), exit_side=side, path=path)


def simulate_exit_batch(
    spec: DiffusionSpec,
    x0: float,
    interval: tuple[float, float],
    step: float,
    rng: RngStream,
    n_paths: int,
) -> ExitBatch:
    """simulate_to_exit 的批量版本，整批共享一个随机数流"""
    spec.require_zero_drift()
    _check_step(step)
    a, b = _check_interval(interval)
    if not a <= x0 <= b:
        raise ParameterError("起点不在区间内", parameter="x0", value=x0)
    if n_paths < 1:
        raise ParameterError("路径数必须至少为 1", parameter="n_paths", value=n_paths)

    times, upper, _ = _exit_kernel(spec, np.full(n_paths, float(x0)), a, b, step, rng.generator())
    return ExitBatch(times=times, upper=upper)
