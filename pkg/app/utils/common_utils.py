"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: common_utils.py
@DateTime: 2025/01/20 16:30:00
@Docs: 通用工具函数 - 哈希、计时、分批与网格
"""

import hashlib
import json
import math
import time
from typing import Any

import numpy as np


def calculate_hash(content: str) -> str:
    """计算内容的 sha256 十六进制摘要"""
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


def canonical_json(data: Any) -> str:
    """生成键有序、无多余空白的 JSON 文本，用于计算配置哈希"""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=str)


def format_duration(seconds: float) -> str:
    """把秒数写成 850ms / 12.3s / 4m05s / 2h10m 形式"""
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes, secs = divmod(int(round(seconds)), 60)
    if minutes < 60:
        return f"{minutes}m{secs:02d}s"
    hours, minutes = divmod(minutes, 60)
    return f"{hours}h{minutes:02d}m"


def chunk_sizes(total: int, chunk_size: int) -> list[int]:
    """
    将总数按固定大小切分

    Args:
        total: 总数
        chunk_size: 每块大小

    Returns:
        每块的大小列表（最后一块可能不足）
    """
    if chunk_size <= 0:
        raise ValueError("分块大小必须为正数")
    full, rest = divmod(total, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def standard_error(samples: np.ndarray) -> float:
    """样本均值的标准误：样本标准差 / sqrt(N)"""
    n = len(samples)
    if n < 2:
        return 0.0
    return float(np.std(samples, ddof=1) / math.sqrt(n))


def bernoulli_standard_error(p: float, n: int) -> float:
    """频率估计的标准误"""
    if n <= 0:
        return 0.0
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def geometric_grid(start: float, stop: float, points: int) -> np.ndarray:
    """从 start 到 stop 的几何网格（含端点）"""
    if start <= 0 or stop <= start:
        raise ValueError("几何网格需要 0 < start < stop")
    return np.geomspace(start, stop, points)


class Timer:
    """上下文计时器，退出后 elapsed 固定"""

    def __init__(self) -> None:
        self._start: float | None = None
        self._end: float | None = None

    def __enter__(self) -> "Timer":
        self._start = time.perf_counter()
        self._end = None
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self._end = time.perf_counter()

    @property
    def elapsed(self) -> float:
        if self._start is None:
            return 0.0
        return (self._end or time.perf_counter()) - self._start

    @property
    def elapsed_formatted(self) -> str:
        return format_duration(self.elapsed)
