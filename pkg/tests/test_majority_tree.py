"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: test_majority_tree.py
@DateTime: 2025/06/30 15:30:00
@Docs: 递归多数树的取值、规范状态与最优查询代价
"""

import itertools
import math
from fractions import Fraction

import pytest

from app.core.exceptions import ParameterError, UnsupportedDepthError
from app.majority_tree.tree import (
    GAMMA_LOWER,
    GAMMA_UPPER,
    brownian_depth1_cost,
    canonical_state,
    cost_table,
    gamma_report,
    leaf_count,
    optimal_cost,
    r1,
    recursive_majority,
)


class TestRecursiveMajority:
    @pytest.mark.parametrize(
        "leaves, expected",
        [
            ([1, 1, 0], 1),
            ([0, 1, 0], 0),
            ([1, 1, 0, 0, 0, 1, 0, 1, 0], 0),
            ([1, 0, 1, 0, 1, 1, 0, 0, 0], 1),
        ],
    )
    def test_values(self, leaves, expected):
        assert recursive_majority(leaves) == expected

    @pytest.mark.parametrize("depth", [1, 2])
    def test_monotone_in_each_leaf(self, depth):
        n_leaves = leaf_count(depth)
        for leaves in itertools.product((0, 1), repeat=n_leaves):
            value = recursive_majority(leaves)
            for i in range(n_leaves):
                if leaves[i] == 0:
                    raised = list(leaves)
                    raised[i] = 1
                    assert recursive_majority(raised) >= value

    def test_leaf_count_must_be_power_of_three(self):
        with pytest.raises(ParameterError):
            recursive_majority([1, 0, 1, 1])

    def test_leaves_must_be_binary(self):
        with pytest.raises(ParameterError):
            recursive_majority([1, 2, 0])

    def test_leaf_count(self):
        assert [leaf_count(n) for n in range(4)] == [1, 3, 9, 27]


def test_canonical_state_ignores_permutations_within_subtrees():
    assert canonical_state([1, None, 0]) == canonical_state([0, 1, None])
    a = canonical_state([1, 0, None, None, None, None, 0, 0, 1])
    b = canonical_state([None, None, None, 0, 1, 0, None, 1, 0])
    assert a == b
    assert canonical_state([1, 0, None]) != canonical_state([1, 1, None])


class TestOptimalCost:
    def test_depth_one_exact(self):
        table = optimal_cost(1, Fraction(1, 2), exact=True)
        assert table.exact == Fraction(5, 2)
        assert table.cost == 2.5
        assert r1(0.5) == 2.5

    @pytest.mark.parametrize("k", [1, 13, 50, 77, 99])
    def test_depth_one_formula(self, k):
        p = Fraction(k, 100)
        assert optimal_cost(1, p, exact=True).exact == 2 * (1 + p * (1 - p))

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_depth_two_bounds(self, p):
        first = optimal_cost(1, p, exact=True)
        second = optimal_cost(2, p, exact=True)
        assert second.within_trivial_bounds
        assert second.exact <= first.exact**2

    def test_symmetric_in_p(self):
        assert optimal_cost(2, 0.3).cost == pytest.approx(optimal_cost(2, 0.7).cost, rel=1e-12)

    def test_depth_three_unsupported(self):
        with pytest.raises(UnsupportedDepthError):
            optimal_cost(3, 0.5)

    @pytest.mark.parametrize("p", [0.0, 1.0, 1.5])
    def test_p_outside_open_interval(self, p):
        with pytest.raises(ParameterError):
            optimal_cost(1, p)


class TestBrownianCost:
    def test_value_at_half(self):
        assert brownian_depth1_cost(0.5) == pytest.approx(12 * math.log(2) - 6, abs=1e-12)

    def test_endpoints_and_bound(self):
        assert brownian_depth1_cost(0.0) == 0.0
        assert brownian_depth1_cost(1.0) == 0.0
        for k in range(1, 100):
            p = k / 100
            assert brownian_depth1_cost(p) <= r1(p)


def test_gamma_report_and_cost_table():
    report = gamma_report([optimal_cost(1, 0.5), optimal_cost(2, 0.5)])
    assert report.sub_multiplicative is True
    assert report.bracket == (GAMMA_LOWER, GAMMA_UPPER)
    assert report.rates[1] == pytest.approx(2.5)

    frame = cost_table([0.25, 0.5], depths=(1, 2))
    assert frame.columns == ["p", "depth", "r_n", "r_n^{1/n}", "R1", "bound_ok"]
    assert frame.height == 4
    assert frame["bound_ok"].all()
