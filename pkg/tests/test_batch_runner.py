"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: test_batch_runner.py
@DateTime: 2025/06/30 11:40:00
@Docs: 批量执行器与随机数流
"""

import numpy as np
import pytest

from app.core.exceptions import ParameterError
from app.simulation.batch_runner import BatchRunner, BatchTask
from app.simulation.rng import RngStream


def draw(task: BatchTask) -> np.ndarray:
    return task.rng.generator().standard_normal(task.n_paths)


class TestRngStream:
    def test_same_stream_repeats(self):
        a = RngStream(7, 3).generator().random(5)
        b = RngStream(7, 3).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(7, 0).generator().random(5)
        b = RngStream(7, 1).generator().random(5)
        assert not np.array_equal(a, b)
        assert RngStream(7, 1).child(2) == RngStream(7, 3)

    @pytest.mark.parametrize("seed, index", [(-1, 0), (2**64, 0), (0, -1)])
    def test_invalid_stream(self, seed, index):
        with pytest.raises(ParameterError):
            RngStream(seed, index)


class TestBatchRunner:
    def test_plan_splits_paths(self):
        tasks = BatchRunner(1, batch_size=400).plan(1000)
        assert [t.n_paths for t in tasks] == [400, 400, 200]
        assert [t.rng.stream_index for t in tasks] == [0, 1, 2]

    def test_stream_offset_separates_arms(self):
        tasks = BatchRunner(1, batch_size=400, stream_offset=1000).plan(500)
        assert [t.rng.stream_index for t in tasks] == [1000, 1001]

    @pytest.mark.parametrize("workers", [2, 8])
    def test_results_independent_of_workers(self, workers):
        serial = np.concatenate(BatchRunner(11, workers=1, batch_size=100).run(1050, draw))
        parallel = np.concatenate(BatchRunner(11, workers=workers, batch_size=100).run(1050, draw))
        np.testing.assert_array_equal(serial, parallel)

    @pytest.mark.asyncio
    async def test_run_async_keeps_batch_order(self):
        runner = BatchRunner(5, workers=4, batch_size=10)
        results = await runner.run_async(35, lambda task: task.index)
        assert results == [0, 1, 2, 3]
