"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: statistics.py
@DateTime: 2025/06/24 09:00:00
@Docs: 蒙特卡洛统计 - 生存曲线、双样本 KS 检验、Laplace 积分
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from app.core.exceptions import ParameterError
from app.utils.common_utils import standard_error


@dataclass
class KSResult:
    """双样本 KS 检验结果"""

    statistic: float
    p_value: float
    n_a: int
    n_b: int


def ks_two_sample(samples_a: np.ndarray, samples_b: np.ndarray) -> KSResult:
    """双样本 Kolmogorov–Smirnov 检验，统计量 sup|F_a - F_b|，渐近 p 值

    Raises:
        ParameterError: 任一样本为空
    """
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ParameterError("KS 检验的样本不能为空", parameter="samples", value=(a.size, b.size))
    result = stats.ks_2samp(a, b, method="asymp")
    return KSResult(statistic=float(result.statistic), p_value=float(result.pvalue), n_a=a.size, n_b=b.size)


@dataclass
class SurvivalCurve:
    """经验生存函数 P(τ > t) 及其逐点标准误"""

    grid: np.ndarray
    survival: np.ndarray
    standard_error: np.ndarray
    n: int


def survival_curve(times: np.ndarray, grid: np.ndarray) -> SurvivalCurve:
    """在时间网格上计算 P(τ > t)

    删失路径的 τ 至少为删失时刻，网格不超过删失时刻时按存活计入。
    """
    samples = np.sort(np.asarray(times, dtype=float))
    n = samples.size
    if n == 0:
        raise ParameterError("生存曲线需要至少一个样本", parameter="times", value=0)
    alive = n - np.searchsorted(samples, grid, side="right")
    survival = alive / n
    se = np.sqrt(survival * (1.0 - survival) / n)
    return SurvivalCurve(grid=np.asarray(grid, dtype=float), survival=survival, standard_error=se, n=n)


@dataclass
class LaplaceEstimate:
    """∫ P(τ>t) e^{-rt} dt 的蒙特卡洛估计"""

    value: float
    standard_error: float
    tail_bound: float


def laplace_of_survival(times: np.ndarray, r: float, censored: np.ndarray | None = None) -> LaplaceEstimate:
    """∫_0^∞ P(τ>t)e^{-rt}dt = E[(1 - e^{-rτ})/r]

    删失样本按删失时刻截断，tail_bound 为截断造成的最大偏差 (删失占比)·e^{-rH}/r。
    """
    if not r > 0:
        raise ParameterError("折现率必须为正", parameter="r", value=r)
    samples = np.asarray(times, dtype=float)
    contributions = (1.0 - np.exp(-r * samples)) / r
    tail = 0.0
    if censored is not None and np.any(censored):
        horizon = float(np.max(samples[censored]))
        tail = float(np.mean(censored)) * np.exp(-r * horizon) / r
    return LaplaceEstimate(
        value=float(np.mean(contributions)),
        standard_error=standard_error(contributions),
        tail_bound=tail,
    )


def dominance_violations(
    optimal: SurvivalCurve,
    baseline: SurvivalCurve,
    k_se: float = 3.0,
) -> int:
    """统计最优策略生存曲线高于基线超过 k 倍合并标准误的网格点数"""
    combined = np.sqrt(optimal.standard_error**2 + baseline.standard_error**2)
    return int(np.count_nonzero(optimal.survival > baseline.survival + k_se * combined))
