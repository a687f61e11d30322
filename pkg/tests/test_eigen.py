"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: test_eigen.py
@DateTime: 2025/06/30 14:00:00
@Docs: 特征函数对与双边出界变换
"""

import math

import numpy as np
import pytest

from app.analytics.eigen import diagnose, solve_eigenpair, two_sided_transform, two_sided_transform_array
from app.core.exceptions import DegenerateIntervalError, ParameterError
from app.simulation.diffusion import DiffusionSpec, simulate_exit_batch
from tests.conftest import MC_BAND, MC_PATHS, MC_STEP


def test_closed_form_for_brownian_motion(bm):
    eigen = solve_eigenpair(bm, 1.0)
    assert eigen.method == "closed_form"
    assert float(eigen.h_plus(0.5)) == pytest.approx(math.sinh(math.sqrt(0.5)) / math.sinh(math.sqrt(2.0)))
    assert float(eigen.h_plus(0.5)) == pytest.approx(0.3966, abs=1e-4)
    assert float(eigen.h_minus(0.5)) == pytest.approx(float(eigen.h_plus(0.5)))
    report = diagnose(eigen, bm)
    assert report.monotone
    assert report.boundary_error < 1e-12
    assert report.wronskian_deviation < 1e-9


def test_shooting_matches_scaled_closed_form():
    spec = DiffusionSpec.constant_drift(0.0, sigma=2.0)
    eigen = solve_eigenpair(spec, 1.0)
    assert eigen.method == "shooting"
    k = math.sqrt(0.5)
    grid = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(eigen.h_plus(grid), np.sinh(k * grid) / math.sinh(k), atol=1e-8)
    np.testing.assert_allclose(eigen.h_minus(grid), np.sinh(k * (1 - grid)) / math.sinh(k), atol=1e-8)
    assert eigen.phi == pytest.approx(k / math.sinh(k), rel=1e-7)


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_rate_must_be_positive(bm, r):
    with pytest.raises(ParameterError):
        solve_eigenpair(bm, r)


class TestTwoSidedTransform:
    def test_endpoints(self, bm):
        eigen = solve_eigenpair(bm, 1.0)
        assert two_sided_transform(eigen, 0.2, 0.8, 0.2) == pytest.approx((0.0, 1.0))
        assert two_sided_transform(eigen, 0.2, 0.8, 0.8) == pytest.approx((1.0, 0.0))

    def test_sum_below_one(self, bm):
        eigen = solve_eigenpair(bm, 2.0)
        plus, minus = two_sided_transform_array(eigen, 0.1, 0.9, np.linspace(0.1, 0.9, 17))
        assert np.all(plus + minus <= 1.0 + 1e-12)
        assert np.all(np.diff(plus) > 0)

    def test_small_rate_recovers_exit_probabilities(self, bm):
        eigen = solve_eigenpair(bm, 1e-8)
        plus, minus = two_sided_transform(eigen, 0.2, 0.7, 0.3)
        assert plus == pytest.approx(0.2, abs=1e-6)
        assert minus == pytest.approx(0.8, abs=1e-6)

    def test_degenerate_interval(self, bm):
        eigen = solve_eigenpair(bm, 1.0)
        with pytest.raises(DegenerateIntervalError):
            two_sided_transform(eigen, 0.4, 0.4, 0.4)

    @pytest.mark.parametrize("a, b, u", [(0.6, 0.4, 0.5), (0.2, 0.5, 0.7), (-0.1, 0.5, 0.2)])
    def test_invalid_arguments(self, bm, a, b, u):
        eigen = solve_eigenpair(bm, 1.0)
        with pytest.raises(ParameterError):
            two_sided_transform(eigen, a, b, u)


def test_transform_matches_discounted_exit_sample(bm, stream):
    r, a, b, u = 1.0, 0.25, 1.0, 0.5
    plus, minus = two_sided_transform(solve_eigenpair(bm, r), a, b, u)
    batch = simulate_exit_batch(bm, u, (a, b), MC_STEP, stream(30), MC_PATHS)
    discount = np.exp(-r * batch.times)
    for expected, samples in ((plus, discount * batch.upper), (minus, discount * ~batch.upper)):
        se = samples.std(ddof=1) / math.sqrt(samples.size)
        assert abs(samples.mean() - expected) <= MC_BAND * se
