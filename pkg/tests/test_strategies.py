"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: test_strategies.py
@DateTime: 2025/06/30 09:40:00
@Docs: 分配策略的选择规则
"""

import numpy as np
import pytest

from app.core.enums import ExtremeKind, StrategyKind
from app.core.exceptions import NoDecisionNeededError, ParameterError
from app.schemas.experiment import StrategyConfig
from app.simulation.state import TripleState, decision_value_probability
from app.simulation.strategies import (
    EpsilonStrategy,
    HistorySummary,
    RoundRobin,
    RunExtreme,
    RunTheMiddle,
    RunTwoThenThird,
    choose_index,
    strategy_from_config,
)


@pytest.mark.parametrize(
    ("state", "expected"),
    [((0.2, 0.5, 0.9), 2), ((0.2, 0.9, 0.5), 3), ((0.0, 0.5, 1.0), 2), ((0.5, 0.5, 0.7), 1), ((0.3, 0.6, 0.6), 2)],
)
def test_run_the_middle(state, expected):
    assert choose_index(RunTheMiddle(), TripleState.of(state)) == expected


def test_decided_state_needs_no_choice():
    with pytest.raises(NoDecisionNeededError):
        choose_index(RunTheMiddle(), TripleState(1.0, 1.0, 0.3))


def test_run_two_then_third_order():
    strategy = RunTwoThenThird((1, 2))
    assert choose_index(strategy, TripleState(0.2, 0.5, 0.9)) == 1
    assert choose_index(strategy, TripleState(0.0, 0.5, 0.9)) == 2
    assert choose_index(RunTwoThenThird((3, 1)), TripleState(0.2, 0.5, 0.9)) == 3
    with pytest.raises(ParameterError):
        RunTwoThenThird((1, 1))


def test_run_extreme():
    state = TripleState(0.2, 0.5, 0.9)
    assert choose_index(RunExtreme(ExtremeKind.MAX), state) == 3
    assert choose_index(RunExtreme(ExtremeKind.MIN), state) == 1
    assert choose_index(RunExtreme(ExtremeKind.MAX), TripleState(0.2, 0.5, 1.0)) == 2


def test_round_robin_rotates_by_block():
    state = TripleState(0.2, 0.5, 0.9)
    strategy = RoundRobin(block=0.02)
    summary = HistorySummary.initial(state.as_array(), step=0.01)
    assert choose_index(strategy, state, summary) == 1
    summary.step_count[:] = 2
    assert choose_index(strategy, state, summary) == 2
    summary.step_count[:] = 6
    assert choose_index(strategy, state, summary) == 1


def test_round_robin_skips_absorbed():
    state = TripleState(0.0, 0.5, 0.9)
    summary = HistorySummary.initial(state.as_array(), step=0.01)
    assert choose_index(RoundRobin(block=0.01), state, summary) == 2


def test_epsilon_strategy_holds_within_block():
    state = TripleState(0.2, 0.5, 0.9)
    strategy = EpsilonStrategy(RunTheMiddle(), epsilon=0.05)
    summary = HistorySummary.initial(state.as_array(), step=0.01)
    assert choose_index(strategy, state, summary) == 2

    summary.previous[:] = 0
    summary.step_count[:] = 1
    assert choose_index(strategy, state, summary) == 1
    summary.step_count[:] = 5
    assert choose_index(strategy, state, summary) == 2


def test_epsilon_strategy_rejects_nesting():
    with pytest.raises(ParameterError):
        EpsilonStrategy(EpsilonStrategy(RunTheMiddle(), 0.1), 0.1)
    with pytest.raises(ParameterError):
        EpsilonStrategy(RunTheMiddle(), 0.0)


def test_history_summary_initial_flags():
    summary = HistorySummary.initial(np.array([[0.0, 0.5, 1.0]]), step=0.1)
    assert summary.absorbed.tolist() == [[True, False, True]]
    assert summary.previous.tolist() == [-1]


def test_strategy_from_config():
    built = strategy_from_config(
        StrategyConfig(kind=StrategyKind.EPSILON_STRATEGY, epsilon=0.01, base=StrategyKind.ROUND_ROBIN, block=0.05)
    )
    assert isinstance(built, EpsilonStrategy)
    assert isinstance(built.base, RoundRobin)
    assert built.name == "epsilon_strategy(round_robin(0.05),0.01)"
    assert strategy_from_config(StrategyConfig(kind=StrategyKind.RUN_TWO_THEN_THIRD, pair=(2, 3))).pair == (2, 3)


@pytest.mark.parametrize(
    ("state", "expected"),
    [((0.5, 0.5, 0.5), 0.5), ((1.0, 1.0, 0.3), 1.0), ((0.2, 0.5, 0.9), 0.55)],
)
def test_decision_value_probability(state, expected):
    assert decision_value_probability(state) == pytest.approx(expected)
