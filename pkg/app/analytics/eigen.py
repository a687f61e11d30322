"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: eigen.py
@DateTime: 2025/06/25 09:20:00
@Docs: 特征函数对 h± 与双边出界变换
"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from app.core.config import settings
from app.core.exceptions import DegenerateIntervalError, NumericalError, ParameterError
from app.simulation.diffusion import DiffusionSpec
from app.utils.logger import logger

ArrayFn = Callable[[float | np.ndarray], float | np.ndarray]


@dataclass(frozen=True)
class EigenPair:
    """½sigma²f'' = rf 的一对解

    h_plus(0)=0, h_plus(1)=1 递增；h_minus(0)=1, h_minus(1)=0 递减；
    phi = h_minus·h_plus' - h_plus·h_minus' 为常数。
    """

    r: float
    h_minus: ArrayFn
    h_plus: ArrayFn
    h_minus_prime: ArrayFn
    h_plus_prime: ArrayFn
    phi: float
    method: str


@dataclass
class EigenDiagnostics:
    """特征函数不变量的数值检查结果"""

    ode_residual: float
    wronskian_deviation: float
    boundary_error: float
    monotone: bool


def _closed_form(r: float) -> EigenPair:
    k = np.sqrt(2.0 * r)
    denom = np.sinh(k)
    return EigenPair(
        r=r,
        h_minus=lambda u: np.sinh(k * (1.0 - np.asarray(u))) / denom,
        h_plus=lambda u: np.sinh(k * np.asarray(u)) / denom,
        h_minus_prime=lambda u: -k * np.cosh(k * (1.0 - np.asarray(u))) / denom,
        h_plus_prime=lambda u: k * np.cosh(k * np.asarray(u)) / denom,
        phi=float(k / denom),
        method="closed_form",
    )


def _dense(solution, index: int, scale: float) -> ArrayFn:
    def evaluate(u: float | np.ndarray) -> float | np.ndarray:
        points = np.clip(np.atleast_1d(np.asarray(u, dtype=float)), 0.0, 1.0)
        values = solution.sol(points)[index] * scale
        return float(values[0]) if np.ndim(u) == 0 else values

    return evaluate


def _shooting(spec: DiffusionSpec, r: float) -> EigenPair:
    """线性打靶：y'' = 2r/sigma² y 分别从 0 与 1 出发，再归一化"""

    def rhs(u: float, y: np.ndarray) -> np.ndarray:
        sig = float(spec.sigma(np.array(min(max(u, 0.0), 1.0))))
        return np.array([y[1], 2.0 * r / sig**2 * y[0]])

    options = {"method": "DOP853", "rtol": settings.EIGEN_RTOL, "atol": settings.EIGEN_ATOL, "dense_output": True}
    forward = integrate.solve_ivp(rhs, (0.0, 1.0), [0.0, 1.0], **options)
    backward = integrate.solve_ivp(rhs, (1.0, 0.0), [0.0, -1.0], **options)
    for name, solution in (("h_plus", forward), ("h_minus", backward)):
        if not solution.success:
            raise NumericalError(f"特征函数边值问题求解失败: {name}", detail={"message": solution.message, "r": r})

    plus_end = float(forward.y[0, -1])
    minus_start = float(backward.y[0, -1])
    if plus_end <= 0 or minus_start <= 0:
        raise NumericalError("打靶解在端点处非正", detail={"h_plus(1)": plus_end, "h_minus(0)": minus_start, "r": r})

    return EigenPair(
        r=r,
        h_minus=_dense(backward, 0, 1.0 / minus_start),
        h_plus=_dense(forward, 0, 1.0 / plus_end),
        h_minus_prime=_dense(backward, 1, 1.0 / minus_start),
        h_plus_prime=_dense(forward, 1, 1.0 / plus_end),
        phi=1.0 / plus_end,
        method="shooting",
    )


def diagnose(eigen: EigenPair, spec: DiffusionSpec, points: int | None = None) -> EigenDiagnostics:
    """在检查网格上评估 ODE 残差、Wronskian 常数性、边界值与单调性"""
    grid = np.linspace(0.0, 1.0, points or settings.EIGEN_CHECK_POINTS)
    interior = grid[1:-1]
    d = 1e-6
    sig2 = np.asarray(spec.sigma(interior), dtype=float) ** 2

    residual = 0.0
    for h, h_prime in ((eigen.h_plus, eigen.h_plus_prime), (eigen.h_minus, eigen.h_minus_prime)):
        second = (np.asarray(h_prime(interior + d)) - np.asarray(h_prime(interior - d))) / (2 * d)
        residual = max(residual, float(np.max(np.abs(0.5 * sig2 * second - eigen.r * np.asarray(h(interior))))))

    wronskian = np.asarray(eigen.h_minus(grid)) * np.asarray(eigen.h_plus_prime(grid)) - np.asarray(
        eigen.h_plus(grid)
    ) * np.asarray(eigen.h_minus_prime(grid))
    boundary = max(
        abs(float(eigen.h_plus(0.0))),
        abs(float(eigen.h_plus(1.0)) - 1.0),
        abs(float(eigen.h_minus(0.0)) - 1.0),
        abs(float(eigen.h_minus(1.0))),
    )
    rising = np.all(np.diff(np.asarray(eigen.h_plus(grid))) > 0)
    falling = np.all(np.diff(np.asarray(eigen.h_minus(grid))) < 0)
    monotone = bool(rising and falling)
    return EigenDiagnostics(
        ode_residual=residual,
        wronskian_deviation=float(np.max(np.abs(wronskian - eigen.phi))),
        boundary_error=boundary,
        monotone=monotone,
    )


def solve_eigenpair(spec: DiffusionSpec, r: float) -> EigenPair:
    """求解 ½sigma²f'' = rf 的特征函数对

    sigma≡1 时使用 sinh 闭式解，否则对两个边值问题做线性打靶。

    Args:
        spec: 扩散模型
        r: 折现率

    Returns:
        EigenPair: 满足全部不变量的特征函数对

    Raises:
        NumericalError: 求解失败或不变量检查不通过
    """
    if not r > 0:
        raise ParameterError("折现率必须为正", parameter="r", value=r)
    if spec.unit_volatility:
        return _closed_form(r)

    spec.validate()
    eigen = _shooting(spec, r)
    report = diagnose(eigen, spec)
    tolerance = max(1e-6, 1e3 * settings.EIGEN_RTOL) * (1.0 + r)
    if (
        report.ode_residual > 1e-5 * (1.0 + r)
        or report.wronskian_deviation > tolerance * eigen.phi
        or report.boundary_error > tolerance
        or not report.monotone
    ):
        raise NumericalError("特征函数不变量检查未通过", detail=report.__dict__, residual=report.ode_residual)
    logger.debug(f"特征函数打靶求解完成: r={r}", spec=spec.label, phi=eigen.phi)
    return eigen


def two_sided_transform(eigen: EigenPair, a: float, b: float, u: float) -> tuple[float, float]:
    """区间 (a,b) 上的双边出界变换

    hplus_ab(u) = E_u[e^{-r m_b}; m_b < m_a]，hminus_ab(u) = E_u[e^{-r m_a}; m_a < m_b]。

    Returns:
        (hplus_ab, hminus_ab)

    Raises:
        DegenerateIntervalError: 分母低于容差（a≈b）
    """
    if not 0.0 <= a <= b <= 1.0:
        raise ParameterError("区间需满足 0 <= a < b <= 1", parameter="interval", value=(a, b))
    if not a <= u <= b:
        raise ParameterError("u 不在区间内", parameter="u", value=u)
    plus, minus = two_sided_transform_array(eigen, a, b, np.array(u, dtype=float))
    return float(plus), float(minus)


def two_sided_transform_array(
    eigen: EigenPair,
    a: float | np.ndarray,
    b: float | np.ndarray,
    u: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """two_sided_transform 的向量化版本，a、b、u 可逐元素广播"""
    hm_a, hp_a = np.asarray(eigen.h_minus(a)), np.asarray(eigen.h_plus(a))
    hm_b, hp_b = np.asarray(eigen.h_minus(b)), np.asarray(eigen.h_plus(b))
    hm_u, hp_u = np.asarray(eigen.h_minus(u)), np.asarray(eigen.h_plus(u))
    denominator = hm_a * hp_b - hm_b * hp_a
    if np.any(np.abs(denominator) < settings.DEGENERATE_TOL):
        shape = np.shape(denominator)
        flat = np.abs(np.atleast_1d(denominator)).ravel()
        k = int(np.argmin(flat))
        raise DegenerateIntervalError(
            float(np.atleast_1d(np.broadcast_to(a, shape)).ravel()[k]),
            float(np.atleast_1d(np.broadcast_to(b, shape)).ravel()[k]),
            denominator=float(flat[k]),
        )
    plus = (hm_a * hp_u - hm_u * hp_a) / denominator
    minus = (hm_u * hp_b - hm_b * hp_u) / denominator
    return np.clip(plus, 0.0, 1.0), np.clip(minus, 0.0, 1.0)
