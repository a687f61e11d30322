"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: batch_runner.py
@DateTime: 2025/06/23 11:30:00
@Docs: 批量仿真执行器 - 将路径分批并发执行并按批次顺序聚合
"""

import asyncio
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

from app.core.config import settings
from app.simulation.rng import RngStream
from app.utils.common_utils import Timer, chunk_sizes
from app.utils.logger import logger


@dataclass(frozen=True)
class BatchTask:
    """一个批次：路径数与专属随机数流"""

    index: int
    n_paths: int
    rng: RngStream


class BatchRunner:
    """批量仿真执行器

    第 b 批使用 RngStream(seed, stream_offset + b)，结果按批次顺序拼接，
    因此输出与工作线程数、完成顺序无关。
    """

    def __init__(self, seed: int, workers: int | None = None, batch_size: int | None = None, stream_offset: int = 0):
        """初始化执行器

        Args:
            seed: 随机种子
            workers: 最大并发工作线程数
            batch_size: 每批路径数
            stream_offset: 流编号偏移，用于区分同一种子下的不同实验臂
        """
        self.seed = seed
        self.workers = workers or settings.WORKERS
        self.batch_size = batch_size or settings.BATCH_SIZE
        self.stream_offset = stream_offset

    def plan(self, n_paths: int) -> list[BatchTask]:
        """把 n_paths 切分为批次"""
        return [
            BatchTask(index=i, n_paths=size, rng=RngStream(self.seed, self.stream_offset + i))
            for i, size in enumerate(chunk_sizes(n_paths, self.batch_size))
        ]

    async def run_async[R](self, n_paths: int, simulate: Callable[[BatchTask], R]) -> list[R]:
        """并发执行所有批次

        Args:
            n_paths: 总路径数
            simulate: 单批仿真函数，在工作线程中调用

        Returns:
            按批次顺序排列的结果
        """
        semaphore = asyncio.Semaphore(self.workers)
        tasks = self.plan(n_paths)

        async def execute_single_batch(task: BatchTask) -> R:
            async with semaphore:
                return await asyncio.to_thread(simulate, task)

        with Timer() as timer:
            results = await asyncio.gather(*[execute_single_batch(task) for task in tasks])
        logger.debug(
            f"批量仿真完成: {n_paths} 条路径, {len(tasks)} 批, 耗时 {timer.elapsed_formatted}",
            seed=self.seed,
            workers=self.workers,
        )
        return list(results)

    def run(self, n_paths: int, simulate: Callable[[BatchTask], Any]) -> list[Any]:
        """同步入口"""
        return asyncio.run(self.run_async(n_paths, simulate))
