"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: controlled.py
@DateTime: 2025/06/23 14:00:00
@Docs: 三扩散受控过程仿真 - 按策略逐步推进被选中的分量直到进入决策集
"""

from dataclasses import dataclass

import numpy as np
import polars as pl

from app.core.config import settings
from app.core.exceptions import MissingDataError, NumericalError, ParameterError
from app.simulation.allocation import AllocationRecord, check_allocation_axioms
from app.simulation.diffusion import DiffusionSpec, bridge_crossings
from app.simulation.rng import RngStream
from app.simulation.state import TripleState, decision_mask
from app.simulation.strategies import HistorySummary, RunTheMiddle, Strategy
from app.utils.common_utils import bernoulli_standard_error, standard_error


@dataclass
class RunPath:
    """受控轨迹的采样记录

    choices[k] 为 [times[k], times[k+1]) 上运行的分量（0..2），末行为 -1。
    """

    times: np.ndarray
    states: np.ndarray
    choices: np.ndarray


@dataclass
class ControlledRun:
    """单条受控轨迹"""

    decision_time: float
    allocations: tuple[float, float, float]
    decision_value: int | None
    terminal_state: TripleState
    censored: bool = False
    path: RunPath | None = None


@dataclass
class ControlledBatch:
    """一批受控轨迹的结果

    values 中删失路径记为 -1，删失路径的时间为删失时刻。
    """

    times: np.ndarray
    allocations: np.ndarray
    values: np.ndarray
    censored: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def concat(cls, batches: list["ControlledBatch"]) -> "ControlledBatch":
        return cls(
            times=np.concatenate([b.times for b in batches]),
            allocations=np.concatenate([b.allocations for b in batches]),
            values=np.concatenate([b.values for b in batches]),
            censored=np.concatenate([b.censored for b in batches]),
        )

    @property
    def censor_count(self) -> int:
        return int(np.count_nonzero(self.censored))

    @property
    def decided_times(self) -> np.ndarray:
        return self.times[~self.censored]

    @property
    def mean_time(self) -> float:
        decided = self.decided_times
        return float(np.mean(decided)) if decided.size else float("nan")

    @property
    def time_standard_error(self) -> float:
        return standard_error(self.decided_times)

    @property
    def decision_frequency(self) -> float:
        decided = self.values[~self.censored]
        return float(np.mean(decided == 1)) if decided.size else float("nan")

    @property
    def decision_standard_error(self) -> float:
        decided = int(np.count_nonzero(~self.censored))
        return bernoulli_standard_error(self.decision_frequency, decided) if decided else float("nan")


def _check_inputs(spec: DiffusionSpec, step: float, horizon: float) -> None:
    spec.require_zero_drift()
    if not step > 0:
        raise ParameterError("步长必须为正", parameter="step", value=step)
    if not horizon > 0:
        raise ParameterError("删失时长必须为正", parameter="horizon", value=horizon)


def _controlled_kernel(
    spec: DiffusionSpec,
    x0: TripleState,
    strategy: Strategy,
    step: float,
    generator: np.random.Generator,
    n_paths: int,
    horizon: float,
    record: bool = False,
    audit: bool = False,
) -> tuple[ControlledBatch, np.ndarray, RunPath | None]:
    """向量化推进 n_paths 条受控轨迹

    每一步只推进被选中的分量；该分量在步内被吸收且因此进入 D 时，决策时刻取该步中点。
    """
    states = np.tile(x0.as_array(), (n_paths, 1))
    summary = HistorySummary.initial(states, step)
    states = summary.states
    allocations = np.zeros((n_paths, 3))
    times = np.zeros(n_paths)
    censored = np.zeros(n_paths, dtype=bool)
    decided, values = decision_mask(states)
    active = np.flatnonzero(~decided)
    sqrt_dt = np.sqrt(step)
    tol = settings.ALLOCATION_TOL
    check_middle = audit and isinstance(strategy, RunTheMiddle)

    path_t: list[float] = [0.0]
    path_x: list[np.ndarray] = [states[0].copy()]
    path_c: list[int] = []

    while active.size:
        m = active.size
        rows = np.arange(m)
        view = summary.subset(active)
        choice = strategy.choose(view)

        if check_middle:
            chosen_value = view.states[rows, choice]
            if np.any(chosen_value != np.median(view.states, axis=1)):
                raise NumericalError("居中策略选择了非居中分量", detail={"step": int(view.step_count[0])})

        x_prev = view.states[rows, choice]
        moving = ~view.absorbed[rows, choice]
        sig = np.asarray(spec.sigma(x_prev), dtype=float)
        normals = generator.standard_normal(m)
        uniforms = generator.random((m, 2))
        x_next = x_prev + sig * sqrt_dt * normals

        low, up = bridge_crossings(x_prev, x_next, 0.0, 1.0, sig, step, uniforms)
        low &= moving
        up &= moving
        x_next = np.where(low, 0.0, np.where(up, 1.0, x_next))
        x_next = np.where(moving, x_next, x_prev)

        new_states = view.states.copy()
        new_states[rows, choice] = x_next
        now_decided, now_value = decision_mask(new_states)
        dt_used = np.where(now_decided & (low | up), 0.5 * step, step)

        states[active] = new_states
        allocations[active, choice] += dt_used
        times[active] += dt_used
        summary.absorbed[active] = (new_states <= 0.0) | (new_states >= 1.0)
        summary.running_min[active] = np.minimum(summary.running_min[active], new_states)
        summary.running_max[active] = np.maximum(summary.running_max[active], new_states)
        summary.step_count[active] += 1
        summary.previous[active] = choice

        if record:
            path_c.append(int(choice[0]))
            path_t.append(float(times[active[0]]))
            path_x.append(new_states[0].copy())

        values[active] = np.where(now_decided, now_value, values[active])
        over = ~now_decided & (times[active] >= horizon)
        censored[active[over]] = True

        gap = np.abs(allocations[active].sum(axis=1) - times[active])
        if np.any(gap > tol * (1 + summary.step_count[active])):
            raise NumericalError("分配总和偏离日历时间", residual=float(gap.max()))

        active = active[~(now_decided | over)]

    values = np.where(censored, -1, values)
    batch = ControlledBatch(times=times, allocations=allocations, values=values, censored=censored)
    path = None
    if record:
        path_c.append(-1)
        path = RunPath(times=np.array(path_t), states=np.vstack(path_x), choices=np.array(path_c))
    return batch, states, path


def run_controlled(
    spec: DiffusionSpec,
    x0: TripleState,
    strategy: Strategy,
    step: float,
    rng: RngStream,
    record: bool = False,
    horizon: float | None = None,
    audit: bool = False,
) -> ControlledRun:
    """按策略推进三扩散直到首次进入 D

    Args:
        spec: 零漂移扩散
        x0: 初始状态
        strategy: 分配策略
        step: 时间步长
        rng: 随机数流
        record: 是否记录路径
        horizon: 删失时长
        audit: 逐步检查居中策略的选择；记录路径时另检查分配公理

    Returns:
        ControlledRun: 决策时间、各分量分配时间、决策值
    """
    horizon = settings.CENSOR_HORIZON if horizon is None else horizon
    _check_inputs(spec, step, horizon)
    batch, states, path = _controlled_kernel(
        spec, x0, strategy, step, rng.generator(), 1, horizon, record=record, audit=audit
    )
    if audit and path is not None:
        check_allocation_axioms(AllocationRecord.from_choices(path.times, path.choices))
    value = int(batch.values[0])
    return ControlledRun(
        decision_time=float(batch.times[0]),
        allocations=tuple(float(v) for v in batch.allocations[0]),  # type: ignore[arg-type]
        decision_value=None if batch.censored[0] else value,
        terminal_state=TripleState.of(states[0]),
        censored=bool(batch.censored[0]),
        path=path,
    )


def simulate_controlled_batch(
    spec: DiffusionSpec,
    x0: TripleState,
    strategy: Strategy,
    step: float,
    rng: RngStream,
    n_paths: int,
    horizon: float | None = None,
) -> ControlledBatch:
    """run_controlled 的批量版本，整批共享一个随机数流"""
    horizon = settings.CENSOR_HORIZON if horizon is None else horizon
    _check_inputs(spec, step, horizon)
    if n_paths < 1:
        raise ParameterError("路径数必须至少为 1", parameter="n_paths", value=n_paths)
    batch, _, _ = _controlled_kernel(spec, x0, strategy, step, rng.generator(), n_paths, horizon)
    return batch


def _require_path(run: ControlledRun) -> RunPath:
    if run.path is None:
        raise MissingDataError("轨迹未记录路径", detail={"decision_time": run.decision_time})
    return run.path


@dataclass
class ImsSeries:
    """最小值、中间值、最大值的时间序列"""

    times: np.ndarray
    lower: np.ndarray
    middle: np.ndarray
    upper: np.ndarray


def extract_ims(run: ControlledRun) -> ImsSeries:
    """逐时刻取三元组的最小、中间、最大值"""
    path = _require_path(run)
    ordered = np.sort(path.states, axis=1)
    return ImsSeries(times=path.times, lower=ordered[:, 0], middle=ordered[:, 1], upper=ordered[:, 2])


def path_frame(run: ControlledRun) -> pl.DataFrame:
    """路径导出表，列 t, x1, x2, x3, chosen_index（1..3，末行为 0）"""
    path = _require_path(run)
    return pl.DataFrame(
        {
            "t": path.times,
            "x1": path.states[:, 0],
            "x2": path.states[:, 1],
            "x3": path.states[:, 2],
            "chosen_index": path.choices + 1,
        }
    )


def allocation_record(run: ControlledRun) -> AllocationRecord:
    """从记录的路径重建分配 C(t)"""
    path = _require_path(run)
    return AllocationRecord.from_choices(path.times, path.choices)


def sum_increment_statistics(run: ControlledRun) -> tuple[float, float, int]:
    """ξ = X1+X2+X3 沿路径的增量均值、标准误与增量个数"""
    path = _require_path(run)
    increments = np.diff(path.states.sum(axis=1))
    if increments.size == 0:
        return 0.0, 0.0, 0
    return float(np.mean(increments)), standard_error(increments), int(increments.size)
