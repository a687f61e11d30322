"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: conftest.py
@DateTime: 2025/06/30 09:00:00
@Docs: 测试公共夹具 - 扩散模型、计算上下文、随机数流与输出目录
"""

from collections.abc import Callable

import pytest

from app.analytics.value_function import ValueContext
from app.core.config import settings
from app.simulation.diffusion import DiffusionSpec
from app.simulation.rng import RngStream

# 测试规模的蒙特卡洛参数：数千条路径、步长 1e-3，判据取 4 倍标准误
MC_PATHS = 4_000
MC_STEP = 1e-3
MC_BAND = 4.0


@pytest.fixture
def bm() -> DiffusionSpec:
    return DiffusionSpec.brownian()


@pytest.fixture(scope="session")
def ctx() -> ValueContext:
    """整个测试会话共享特征函数缓存"""
    return ValueContext()


@pytest.fixture
def stream() -> Callable[[int], RngStream]:
    """按流编号取固定种子的随机数流"""

    def make(index: int = 0) -> RngStream:
        return RngStream(settings.DEFAULT_SEED, index)

    return make


@pytest.fixture
def small_batches(monkeypatch: pytest.MonkeyPatch) -> int:
    """缩小批大小，使少量路径也跨越多个批次"""
    monkeypatch.setattr(settings, "BATCH_SIZE", 250)
    return 250


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "results"
