"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: test_diffusion.py
@DateTime: 2025/06/30 09:20:00
@Docs: 单扩散模型、自然尺度与出界仿真
"""

import math

import numpy as np
import pytest

from app.core.enums import ExitSide
from app.core.exceptions import InvalidSpecError, ParameterError
from app.schemas.experiment import DiffusionConfig
from app.simulation.diffusion import (
    DiffusionSpec,
    expected_exit_time,
    exit_upper_probability,
    natural_scale,
    simulate_exit_batch,
    simulate_to_exit,
)
from tests.conftest import MC_BAND, MC_PATHS, MC_STEP


def test_brownian_flags(bm):
    assert bm.zero_drift
    assert bm.unit_volatility
    assert bm.is_symmetric()


def test_natural_scale_identity_for_driftless(bm):
    spec, scale = natural_scale(bm)
    assert spec is bm
    assert scale(0.3) == pytest.approx(0.3)
    assert scale.inverse(0.7) == pytest.approx(0.7)


def test_natural_scale_constant_drift():
    c = 1.0
    spec, scale = natural_scale(DiffusionSpec.constant_drift(c))
    expected = (1 - math.exp(-2 * c * 0.3)) / (1 - math.exp(-2 * c))
    assert spec.zero_drift
    assert scale(0.3) == pytest.approx(expected, abs=1e-6)
    assert scale(0.0) == 0.0
    assert scale(1.0) == 1.0


@pytest.mark.parametrize(("x0", "a", "b", "expected"), [(0.5, 0.0, 1.0, 0.5), (0.2, 0.2, 0.9, 0.0), (0.25, 0.0, 0.5, 0.5)])
def test_exit_upper_probability(bm, x0, a, b, expected):
    assert exit_upper_probability(bm, x0, a, b) == pytest.approx(expected)


def test_expected_exit_time_unit_and_scaled_volatility(bm):
    assert expected_exit_time(bm, 0.3, 0.0, 1.0) == pytest.approx(0.21, abs=1e-10)
    doubled = DiffusionSpec.constant_drift(0.0, sigma=2.0)
    assert expected_exit_time(doubled, 0.3, 0.0, 1.0) == pytest.approx(0.21 / 4, abs=1e-10)
    assert expected_exit_time(bm, 1.0, 0.0, 1.0) == 0.0


def test_exit_batch_matches_exit_identities(bm, stream):
    u = 0.3
    batch = simulate_exit_batch(bm, u, (0.0, 1.0), MC_STEP, stream(1), MC_PATHS)
    assert len(batch) == MC_PATHS
    assert abs(batch.mean_time - u * (1 - u)) <= MC_BAND * batch.time_standard_error
    assert abs(batch.upper_frequency - u) <= MC_BAND * batch.upper_standard_error


def test_exit_from_boundary_is_immediate(bm, stream):
    assert simulate_to_exit(bm, 0.0, (0.0, 1.0), MC_STEP, stream()).exit_time == 0.0
    sample = simulate_to_exit(bm, 1.0, (0.0, 1.0), MC_STEP, stream())
    assert sample.exit_time == 0.0
    assert sample.exit_side is ExitSide.UPPER


def test_exit_path_stays_in_interval(bm, stream):
    sample = simulate_to_exit(bm, 0.5, (0.2, 0.8), MC_STEP, stream(2), record_path=True)
    positions = sample.path[:, 1]
    assert np.all((positions >= 0.2) & (positions <= 0.8))
    assert positions[-1] == (0.8 if sample.exit_side is ExitSide.UPPER else 0.2)


def test_same_stream_reproduces(bm, stream):
    first = simulate_to_exit(bm, 0.4, (0.0, 1.0), MC_STEP, stream(5))
    second = simulate_to_exit(bm, 0.4, (0.0, 1.0), MC_STEP, stream(5))
    assert first.exit_time == second.exit_time


def test_drift_requires_natural_scale(stream):
    with pytest.raises(ParameterError):
        simulate_to_exit(DiffusionSpec.constant_drift(0.5), 0.5, (0.0, 1.0), MC_STEP, stream())


def test_invalid_interval_and_step(bm, stream):
    with pytest.raises(ParameterError):
        simulate_to_exit(bm, 0.5, (0.6, 0.4), MC_STEP, stream())
    with pytest.raises(ParameterError):
        simulate_to_exit(bm, 0.5, (0.0, 1.0), 0.0, stream())


def test_tabulated_rejects_non_positive_sigma():
    with pytest.raises(InvalidSpecError):
        DiffusionSpec.tabulated([0.0, 0.5, 1.0], [1.0, 0.0, 1.0])
    with pytest.raises(InvalidSpecError):
        DiffusionSpec.tabulated([0.1, 1.0], [1.0, 1.0])


def test_from_config():
    drifted = DiffusionSpec.from_config(DiffusionConfig(kind="constant-drift", drift=0.5))
    assert not drifted.zero_drift
    table = DiffusionSpec.from_config(
        DiffusionConfig(kind="tabulated", grid=[0.0, 1.0], sigma_values=[1.0, 2.0], label="ramp")
    )
    assert table.label == "ramp"
    assert float(table.sigma(np.array(0.5))) == pytest.approx(1.5)
    assert DiffusionSpec.from_config(DiffusionConfig()).unit_volatility
