"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: rng.py
@DateTime: 2025/06/23 10:00:00
@Docs: 可复现的随机数流
"""

from dataclasses import dataclass

import numpy as np

from app.core.exceptions import ParameterError

_SEED_LIMIT = 2**64


@dataclass(frozen=True)
class RngStream:
    """由 (seed, stream_index) 唯一确定的随机数流

    不同的 (seed, stream_index) 通过 SeedSequence 的 spawn_key 派生出互相独立的 PCG64 状态，
    相同参数总是复现相同序列。
    """

    seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed < _SEED_LIMIT:
            raise ParameterError("种子必须是 64 位无符号整数", parameter="seed", value=self.seed)
        if self.stream_index < 0:
            raise ParameterError("流编号必须非负", parameter="stream_index", value=self.stream_index)

    def generator(self) -> np.random.Generator:
        """创建该流的新生成器，每次调用都从流的起点开始"""
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(sequence))

    def child(self, offset: int) -> "RngStream":
        """同一种子下的另一条流"""
        return RngStream(self.seed, self.stream_index + offset)
