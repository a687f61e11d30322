"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: test_controlled.py
@DateTime: 2025/06/30 10:00:00
@Docs: 三扩散受控过程仿真
"""

import math

import numpy as np
import pytest

from app.core.exceptions import MissingDataError, ParameterError
from app.simulation import controlled
from app.simulation.controlled import (
    allocation_record,
    extract_ims,
    path_frame,
    run_controlled,
    simulate_controlled_batch,
    sum_increment_statistics,
)
from app.simulation.allocation import check_allocation_axioms
from app.simulation.diffusion import DiffusionSpec
from app.simulation.state import TripleState
from app.simulation.strategies import RoundRobin, RunTheMiddle, RunTwoThenThird
from tests.conftest import MC_BAND, MC_PATHS, MC_STEP


def test_start_in_decision_set(bm, stream):
    run = run_controlled(bm, TripleState(1.0, 1.0, 0.3), RunTheMiddle(), MC_STEP, stream())
    assert run.decision_time == 0.0
    assert run.decision_value == 1
    assert not run.censored


def test_single_pivot_mean_time(bm, stream):
    batch = simulate_controlled_batch(bm, TripleState(0.0, 0.5, 1.0), RunTheMiddle(), MC_STEP, stream(1), MC_PATHS)
    assert batch.censor_count == 0
    assert abs(batch.mean_time - 0.25) <= MC_BAND * batch.time_standard_error


@pytest.mark.parametrize("strategy", [RunTheMiddle(), RoundRobin(0.01)], ids=lambda s: s.name)
def test_symmetric_start_decides_one_half(bm, stream, strategy):
    batch = simulate_controlled_batch(bm, TripleState(0.5, 0.5, 0.5), strategy, MC_STEP, stream(2), MC_PATHS)
    assert abs(batch.decision_frequency - 0.5) <= MC_BAND * batch.decision_standard_error


def test_middle_is_faster_than_sequential(bm, stream):
    x0 = TripleState(0.3, 0.5, 0.7)
    middle = simulate_controlled_batch(bm, x0, RunTheMiddle(), MC_STEP, stream(3), MC_PATHS)
    sequential = simulate_controlled_batch(bm, x0, RunTwoThenThird(), MC_STEP, stream(4), MC_PATHS)
    combined = math.hypot(middle.time_standard_error, sequential.time_standard_error)
    assert middle.mean_time <= sequential.mean_time + MC_BAND * combined


def test_recorded_run_bookkeeping(bm, stream):
    run = run_controlled(bm, TripleState(0.3, 0.5, 0.7), RunTheMiddle(), MC_STEP, stream(5), record=True, audit=True)
    terminal = run.terminal_state
    assert terminal.in_decision_set
    assert terminal.decision_value == run.decision_value
    assert sum(run.allocations) == pytest.approx(run.decision_time, abs=1e-9)

    frame = path_frame(run)
    assert frame.columns == ["t", "x1", "x2", "x3", "chosen_index"]
    assert frame["chosen_index"][-1] == 0
    check_allocation_axioms(allocation_record(run))


def test_audited_run_checks_allocation_axioms(bm, stream, monkeypatch):
    checked = []
    monkeypatch.setattr(controlled, "check_allocation_axioms", checked.append)
    run_controlled(bm, TripleState(0.3, 0.5, 0.7), RunTheMiddle(), MC_STEP, stream(9), record=True, audit=True)
    run_controlled(bm, TripleState(0.3, 0.5, 0.7), RunTheMiddle(), MC_STEP, stream(9), audit=True)
    assert len(checked) == 1
    assert checked[0].breakpoints[0] == 0.0


def test_middle_path_extremes_are_monotone(bm, stream):
    run = run_controlled(bm, TripleState(0.2, 0.5, 0.9), RunTheMiddle(), MC_STEP, stream(6), record=True)
    ims = extract_ims(run)
    assert ims.lower[0] == 0.2
    assert ims.upper[0] == 0.9
    assert np.all(np.diff(ims.lower) <= 1e-12)
    assert np.all(np.diff(ims.upper) >= -1e-12)


def test_middle_path_extremes_follow_middle_running_extremes(bm, stream):
    # 交换与吸收发生在步内，允许一个 Euler 步量级的偏差
    tol = 6.0 * math.sqrt(MC_STEP)
    worst = 0.0
    for k in range(20):
        run = run_controlled(bm, TripleState(0.2, 0.5, 0.8), RunTheMiddle(), MC_STEP, stream(200 + k), record=True)
        ims = extract_ims(run)
        lower = np.minimum(np.minimum.accumulate(ims.middle), ims.lower[0])
        upper = np.maximum(np.maximum.accumulate(ims.middle), ims.upper[0])
        assert lower[0] == ims.lower[0]
        assert upper[0] == ims.upper[0]
        worst = max(worst, float(np.max(np.abs(ims.lower - lower))), float(np.max(np.abs(ims.upper - upper))))
    assert worst <= tol


def test_sum_of_components_has_no_drift(bm, stream):
    increments = []
    for k in range(20):
        run = run_controlled(bm, TripleState(0.3, 0.5, 0.7), RunTheMiddle(), MC_STEP, stream(100 + k), record=True)
        mean, _, count = sum_increment_statistics(run)
        increments.append(mean * count)
    # 每条路径 ξ 的总增量，其期望为 0
    total = np.array(increments)
    assert abs(total.mean()) <= MC_BAND * total.std(ddof=1) / math.sqrt(total.size)


def test_unrecorded_run_has_no_path(bm, stream):
    run = run_controlled(bm, TripleState(0.3, 0.5, 0.7), RunTheMiddle(), MC_STEP, stream(7))
    with pytest.raises(MissingDataError):
        path_frame(run)


def test_censoring_is_reported(bm, stream):
    batch = simulate_controlled_batch(
        bm, TripleState(0.3, 0.5, 0.7), RunTheMiddle(), MC_STEP, stream(8), 200, horizon=0.01
    )
    assert batch.censor_count > 0
    assert np.all(batch.values[batch.censored] == -1)
    assert np.all(batch.times[batch.censored] >= 0.01)


def test_drift_is_rejected(stream):
    with pytest.raises(ParameterError):
        simulate_controlled_batch(
            DiffusionSpec.constant_drift(0.3), TripleState(0.3, 0.5, 0.7), RunTheMiddle(), MC_STEP, stream(), 10
        )
