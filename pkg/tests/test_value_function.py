"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: test_value_function.py
@DateTime: 2025/06/30 14:30:00
@Docs: 值函数 v̂、f̂ 与期望决策时间
"""

import math

import numpy as np
import pytest

from app.analytics.value_function import (
    ValueContext,
    closed_form_expected_time,
    expected_decision_time,
    fhat,
    fhat_array,
    lambda_pm,
    vhat,
)
from app.core.enums import ExpectedTimeMethod
from app.core.exceptions import ParameterError
from app.majority_tree.tree import brownian_depth1_cost
from app.simulation.diffusion import DiffusionSpec


class TestVhat:
    @pytest.mark.parametrize("x", [(1.0, 1.0, 0.3), (0.0, 0.2, 0.0), (1.0, 1.0, 1.0)])
    def test_one_on_decision_set(self, ctx, x):
        assert vhat(x, 1.0, ctx) == 1.0

    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    def test_single_pivot(self, ctx, r):
        k = math.sqrt(2 * r)
        expected = 2 * math.sinh(0.5 * k) / math.sinh(k)
        assert vhat((0.0, 0.5, 1.0), r, ctx) == pytest.approx(expected, rel=1e-9)

    def test_order_invariant_and_in_unit_interval(self, ctx):
        value = vhat((0.3, 0.5, 0.7), 1.0, ctx)
        assert 0.0 < value < 1.0
        assert vhat((0.7, 0.3, 0.5), 1.0, ctx) == pytest.approx(value, rel=1e-12)

    @pytest.mark.parametrize("x", [(0.1, 0.4, 0.7), (0.2, 0.2, 0.6), (0.05, 0.5, 0.8)])
    def test_reflection_symmetry(self, ctx, x):
        mirrored = tuple(1.0 - u for u in reversed(x))
        assert vhat(mirrored, 1.0, ctx) == pytest.approx(vhat(x, 1.0, ctx), rel=1e-9)

    def test_reflection_symmetry_for_symmetric_volatility(self):
        grid = np.linspace(0.0, 1.0, 41)
        spec = DiffusionSpec.tabulated(grid, 1.0 + 0.5 * np.sin(np.pi * grid), label="bump")
        assert spec.is_symmetric()
        bump = ValueContext(spec=spec)
        x = (0.15, 0.35, 0.75)
        mirrored = tuple(1.0 - u for u in reversed(x))
        assert vhat(mirrored, 1.0, bump) == pytest.approx(vhat(x, 1.0, bump), rel=1e-6)

    def test_decreasing_in_rate(self, ctx):
        values = [vhat((0.2, 0.4, 0.9), r, ctx) for r in (0.5, 1.0, 2.0)]
        assert values[0] > values[1] > values[2]

    def test_rate_must_be_positive(self, ctx):
        with pytest.raises(ParameterError):
            vhat((0.3, 0.5, 0.7), 0.0, ctx)


class TestFhat:
    def test_middle_component_is_zero(self, ctx):
        assert fhat(2, (0.3, 0.5, 0.7), 1.0, ctx) == 0.0

    def test_extremes_are_positive(self, ctx):
        assert 0.0 < fhat(1, (0.3, 0.5, 0.7), 1.0, ctx) < 1.0
        assert 0.0 < fhat(3, (0.3, 0.5, 0.7), 1.0, ctx) < 1.0

    def test_array_agrees_with_scalar(self, ctx):
        states = np.array([[0.3, 0.5, 0.7], [0.9, 0.2, 0.4], [0.5, 0.5, 0.8], [1.0, 1.0, 0.2]])
        for i in (1, 2, 3):
            expected = [fhat(i, row, 1.0, ctx) for row in states]
            np.testing.assert_allclose(fhat_array(i, states, 1.0, ctx), expected, rtol=1e-10)

    def test_component_index(self, ctx):
        with pytest.raises(ParameterError):
            fhat(4, (0.3, 0.5, 0.7), 1.0, ctx)


def test_lambda_coefficients_on_full_interval(ctx):
    assert lambda_pm(0.0, 1.0, 1.0, ctx) == pytest.approx((1.0, 1.0))


class TestExpectedTime:
    @pytest.mark.parametrize("method", list(ExpectedTimeMethod))
    def test_single_pivot(self, ctx, method):
        assert expected_decision_time((0.0, 0.5, 1.0), ctx, method) == pytest.approx(0.25, abs=1e-4)

    def test_methods_agree(self, ctx):
        x = (0.3, 0.5, 0.7)
        richardson = expected_decision_time(x, ctx, ExpectedTimeMethod.RICHARDSON)
        assert richardson == pytest.approx(closed_form_expected_time(x), abs=1e-4)

    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.8])
    def test_equal_start_matches_depth_one_cost(self, p):
        ratio = closed_form_expected_time((p, p, p)) / (p * (1 - p))
        assert ratio == pytest.approx(brownian_depth1_cost(p), rel=1e-8)

    def test_zero_on_decision_set(self, ctx):
        assert expected_decision_time((1.0, 1.0, 0.5), ctx) == 0.0

    def test_closed_form_requires_unit_volatility(self):
        scaled = ValueContext(spec=DiffusionSpec.constant_drift(0.0, sigma=2.0))
        with pytest.raises(ParameterError):
            expected_decision_time((0.3, 0.5, 0.7), scaled, ExpectedTimeMethod.CLOSED_FORM)
