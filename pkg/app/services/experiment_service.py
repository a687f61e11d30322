"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: experiment_service.py
@DateTime: 2025/06/28 14:00:00
@Docs: 实验子命令服务 - simulate / value / dpbm / tree
"""

import math
from collections.abc import Sequence
from typing import Any

import numpy as np
import polars as pl

from app.analytics.value_function import ValueContext, expected_decision_time, fhat, vhat
from app.analytics.verification import pde_residual, smooth_pasting_gap
from app.core.enums import CommandName, StrategyKind
from app.core.exceptions import InvalidComparisonError, MajorityError, StencilPlacementError
from app.majority_tree.tree import GAMMA_LOWER, GAMMA_UPPER, cost_table
from app.schemas.experiment import DpbmConfig, SimulateConfig, TreeConfig, ValueConfig
from app.schemas.results import (
    DominanceEntry,
    DpbmResult,
    GammaEntry,
    KSReport,
    SimulateResult,
    StrategySummary,
    TreeResult,
    ValueResult,
)
from app.simulation.batch_runner import BatchTask
from app.simulation.controlled import ControlledBatch, simulate_controlled_batch
from app.simulation.diffusion import DiffusionSpec, ExitBatch, ScaleMap, natural_scale
from app.simulation.perturbed import PerturbedSpec, dpbm_parameters, middle_exit_times, simulate_dpbm_batch
from app.simulation.state import TripleState, decision_mask, decision_value_probability
from app.simulation.statistics import (
    KSResult,
    SurvivalCurve,
    dominance_violations,
    ks_two_sample,
    survival_curve,
)
from app.simulation.strategies import RunTheMiddle, Strategy, strategy_from_config
from app.utils.common_utils import geometric_grid
from app.utils.logger import log_function_calls, logger

from .base_service import BaseService

DOMINANCE_K_SE = 3.0


def _finite(value: float) -> float | None:
    return value if math.isfinite(value) else None


def _scaled_spec(config_spec: DiffusionSpec) -> tuple[DiffusionSpec, ScaleMap]:
    if config_spec.zero_drift:
        return config_spec, ScaleMap.identity()
    logger.info("扩散带有漂移，改用自然尺度", diffusion=config_spec.label)
    return natural_scale(config_spec)


def _decided_batch(x0: TripleState, n_paths: int) -> ControlledBatch:
    """起点已在 D 时的退化批次：所有时间为 0"""
    _, values = decision_mask(x0.as_array()[None, :])
    return ControlledBatch(
        times=np.zeros(n_paths),
        allocations=np.zeros((n_paths, 3)),
        values=np.full(n_paths, int(values[0])),
        censored=np.zeros(n_paths, dtype=bool),
    )


def _ks_report(result: KSResult) -> KSReport:
    return KSReport(statistic=result.statistic, p_value=result.p_value, n_a=result.n_a, n_b=result.n_b)


class SimulateService(BaseService[SimulateConfig]):
    """按策略列表运行受控仿真，输出汇总、生存曲线与随机占优比较"""

    command = CommandName.SIMULATE
    config_type = SimulateConfig

    def simulate_strategy(
        self, spec: DiffusionSpec, x0: TripleState, strategy: Strategy, arm: int
    ) -> ControlledBatch:
        """单个策略臂，第 arm 臂使用独立的随机数流段"""
        config = self.config
        if x0.in_decision_set:
            return _decided_batch(x0, config.paths)

        def simulate(task: BatchTask) -> ControlledBatch:
            return simulate_controlled_batch(
                spec, x0, strategy, config.step, task.rng, task.n_paths, horizon=config.horizon
            )

        batch = ControlledBatch.concat(self.runner(arm).run(config.paths, simulate))
        if batch.censor_count:
            logger.warning(
                f"{strategy.name} 有 {batch.censor_count} 条路径在删失时长内未决策，已从平均时间中排除",
                horizon=config.horizon,
            )
        return batch

    def execute(self) -> SimulateResult:
        config = self.config
        spec, scale = _scaled_spec(DiffusionSpec.from_config(config.diffusion))
        x0 = TripleState.of([scale(v) for v in config.x0])
        grid = geometric_grid(config.step, config.horizon, config.survival_points)

        strategies = [strategy_from_config(sc) for sc in config.strategies]
        batches = [self.simulate_strategy(spec, x0, strategy, arm) for arm, strategy in enumerate(strategies)]
        curves = [survival_curve(batch.times, grid) for batch in batches]

        summaries = [
            StrategySummary(
                strategy=strategy.name,
                n_paths=len(batch),
                mean_time=_finite(batch.mean_time),
                standard_error=_finite(batch.time_standard_error),
                decision_frequency=_finite(batch.decision_frequency),
                decision_standard_error=_finite(batch.decision_standard_error),
                censor_count=batch.censor_count,
            )
            for strategy, batch in zip(strategies, batches, strict=True)
        ]
        dominance = self.dominance(strategies, batches, curves)

        survival = pl.concat(
            [
                pl.DataFrame(
                    {
                        "strategy": [strategy.name] * curve.grid.size,
                        "t": curve.grid,
                        "survival": curve.survival,
                        "standard_error": curve.standard_error,
                    }
                )
                for strategy, curve in zip(strategies, curves, strict=True)
            ]
        )
        self.write_table(survival, "survival")
        if config.raw_samples:
            self.write_table(self._samples_frame(strategies, batches), "samples")

        result = SimulateResult(
            provenance=self.provenance(),
            x0=x0.values,
            diffusion=spec.label,
            step=config.step,
            decision_probability=decision_value_probability(x0),
            summaries=summaries,
            dominance=dominance,
        )
        self.write_document(result, "summary")
        return result

    @staticmethod
    def dominance(
        strategies: Sequence[Strategy], batches: Sequence[ControlledBatch], curves: Sequence[SurvivalCurve]
    ) -> list[DominanceEntry]:
        """居中策略对其余每个策略的生存曲线与平均时间比较"""
        middle = next((k for k, s in enumerate(strategies) if s.kind is StrategyKind.RUN_THE_MIDDLE), None)
        if middle is None:
            return []
        entries = []
        for k, strategy in enumerate(strategies):
            if k == middle:
                continue
            ours, theirs = batches[middle], batches[k]
            entries.append(
                DominanceEntry(
                    baseline=strategy.name,
                    violations=dominance_violations(curves[middle], curves[k], DOMINANCE_K_SE),
                    mean_difference=_finite(ours.mean_time - theirs.mean_time),
                    combined_standard_error=_finite(
                        math.hypot(ours.time_standard_error, theirs.time_standard_error)
                    ),
                )
            )
        return entries

    @staticmethod
    def _samples_frame(strategies: Sequence[Strategy], batches: Sequence[ControlledBatch]) -> pl.DataFrame:
        return pl.concat(
            [
                pl.DataFrame(
                    {
                        "strategy": [strategy.name] * len(batch),
                        "path": np.arange(len(batch)),
                        "time": batch.times,
                        "decision_value": batch.values,
                        "censored": batch.censored,
                    }
                )
                for strategy, batch in zip(strategies, batches, strict=True)
            ]
        )


class ValueService(BaseService[ValueConfig]):
    """在 (x, r) 网格上计算 v̂、f̂ⁱ、PDE 残差与光滑粘合差

    单点失败记入 error 列，不中断整个扫描。
    """

    command = CommandName.VALUE
    config_type = ValueConfig

    def execute(self) -> ValueResult:
        config = self.config
        spec, scale = _scaled_spec(DiffusionSpec.from_config(config.diffusion))
        ctx = ValueContext(spec=spec)
        grid = config.grid()

        times: dict[int, float | None] = {}
        rows: list[dict[str, Any]] = []
        for r in config.r_values:
            for k, point in enumerate(grid):
                state = TripleState.of([scale(v) for v in point])
                row = self.evaluate_point(state, r, ctx)
                row = {"r": r, "x1": point[0], "x2": point[1], "x3": point[2], **row}
                if config.expected_time:
                    if k not in times:
                        times[k] = self._expected_time(state, ctx)
                    row["expected_time"] = times[k]
                rows.append(row)

        failures = sum(row["error"] is not None for row in rows)
        if failures:
            logger.warning(f"{failures} 个网格点计算失败，详见 error 列", rows=len(rows))
        self.write_table(pl.DataFrame(rows, schema=self._schema(config.expected_time)), "value")
        result = ValueResult(provenance=self.provenance(), rows=len(rows), failures=failures)
        self.write_document(result, "value_summary")
        return result

    @staticmethod
    def evaluate_point(state: TripleState, r: float, ctx: ValueContext) -> dict[str, Any]:
        """单个网格点的各列，模板无法放置的列为空"""
        row: dict[str, Any] = {"vhat": None, "error": None}
        row |= {f"fhat{i}": None for i in (1, 2, 3)}
        row |= {f"residual{i}": None for i in (1, 2, 3)}
        row["pasting_gap"] = None
        try:
            row["vhat"] = vhat(state, r, ctx)
            for i in (1, 2, 3):
                row[f"fhat{i}"] = fhat(i, state, r, ctx)
            if state.in_decision_set:
                return row
            for i in (1, 2, 3):
                if state.absorbed[i - 1]:
                    continue
                try:
                    row[f"residual{i}"] = pde_residual(state, r, i, ctx)
                except StencilPlacementError:
                    pass
            try:
                row["pasting_gap"] = smooth_pasting_gap(state, r, ctx)
            except StencilPlacementError:
                pass
        except MajorityError as e:
            row["error"] = f"{e.__class__.__name__}: {e.message}"
        return row

    @staticmethod
    def _expected_time(state: TripleState, ctx: ValueContext) -> float | None:
        try:
            return expected_decision_time(state, ctx)
        except MajorityError as e:
            logger.warning(f"期望决策时间计算失败: {e.message}", x=state.values)
            return None

    @staticmethod
    def _schema(expected_time: bool) -> dict[str, Any]:
        schema: dict[str, Any] = {"r": pl.Float64, "x1": pl.Float64, "x2": pl.Float64, "x3": pl.Float64}
        schema |= {"vhat": pl.Float64, "error": pl.Utf8}
        schema |= {f"fhat{i}": pl.Float64 for i in (1, 2, 3)}
        schema |= {f"residual{i}": pl.Float64 for i in (1, 2, 3)}
        schema["pasting_gap"] = pl.Float64
        if expected_time:
            schema["expected_time"] = pl.Float64
        return schema


class DpbmService(BaseService[DpbmConfig]):
    """扰动布朗运动出界时间与居中过程出界时间的双样本 KS 比较

    两个实验臂必须使用不同的种子，否则样本不独立。
    """

    command = CommandName.DPBM
    config_type = DpbmConfig

    def _validate_config(self, config: DpbmConfig) -> None:
        if config.seed == config.resolved_middle_seed:
            raise InvalidComparisonError(
                "两个实验臂使用了相同的种子，样本相互依赖",
                detail={"seed": config.seed, "middle_seed": config.resolved_middle_seed},
            )

    def dpbm_sample(self, pspec: PerturbedSpec, interval: tuple[float, float], n_paths: int, arm: int) -> ExitBatch:
        step = self.config.step

        def simulate(task: BatchTask) -> ExitBatch:
            return simulate_dpbm_batch(pspec, step, task.rng, task.n_paths, interval)

        return ExitBatch.concat(self.runner(arm).run(n_paths, simulate))

    def middle_sample(self, x0: TripleState, n_paths: int, seed: int) -> np.ndarray:
        config = self.config
        spec = DiffusionSpec.brownian()

        def simulate(task: BatchTask) -> ControlledBatch:
            return simulate_controlled_batch(
                spec, x0, RunTheMiddle(), config.step, task.rng, task.n_paths, horizon=config.horizon
            )

        return middle_exit_times(ControlledBatch.concat(self.runner(seed=seed).run(n_paths, simulate)))

    def execute(self) -> DpbmResult:
        config = self.config
        x0 = TripleState.of(config.x0)
        pspec, interval = dpbm_parameters(x0)

        dpbm = self.dpbm_sample(pspec, interval, config.paths, arm=0)
        middle = self.middle_sample(x0, config.paths, config.resolved_middle_seed)
        test = ks_two_sample(dpbm.times, middle)
        logger.info(f"KS 检验: D={test.statistic:.4g}, p={test.p_value:.4g}", paths=config.paths)

        control = None
        if config.control_gaps is not None:
            mismatched = PerturbedSpec(
                i0_prime=config.control_gaps[0], s0_prime=config.control_gaps[1], origin=pspec.origin
            )
            control_batch = self.dpbm_sample(mismatched, interval, config.paths, arm=1)
            control = _ks_report(ks_two_sample(control_batch.times, middle))
            logger.info(f"阴性对照 KS 检验: p={control.p_value:.4g}", gaps=config.control_gaps)

        result = DpbmResult(
            provenance=self.provenance(),
            x0=x0.values,
            gaps=(pspec.i0_prime, pspec.s0_prime),
            exit_interval=interval,
            middle_seed=config.resolved_middle_seed,
            mean_dpbm=dpbm.mean_time,
            mean_middle=float(np.mean(middle)),
            test=_ks_report(test),
            control=control,
        )
        self.write_document(result, "dpbm")
        return result


class TreeService(BaseService[TreeConfig]):
    """多数树最优查询代价表与增长率报告"""

    command = CommandName.TREE
    config_type = TreeConfig

    def execute(self) -> TreeResult:
        config = self.config
        frame = cost_table(config.p_grid, depths=config.depths, exact=config.exact)
        self.write_table(frame, "tree")

        entries = []
        for (p,), rows in frame.group_by("p", maintain_order=True):
            costs = dict(zip(rows["depth"].to_list(), rows["r_n"].to_list(), strict=True))
            rates = dict(zip(rows["depth"].to_list(), rows["r_n^{1/n}"].to_list(), strict=True))
            sub = costs[2] <= costs[1] ** 2 + 1e-12 if 1 in costs and 2 in costs else None
            entries.append(
                GammaEntry(p=p, rates={f"depth{d}": v for d, v in rates.items()}, sub_multiplicative=sub)
            )

        result = TreeResult(provenance=self.provenance(), bracket=(GAMMA_LOWER, GAMMA_UPPER), entries=entries)
        self.write_document(result, "tree_report")
        return result


@log_function_calls()
def cmd_simulate(config: SimulateConfig) -> SimulateResult:
    return SimulateService(config).run()


@log_function_calls()
def cmd_value(config: ValueConfig) -> ValueResult:
    return ValueService(config).run()


@log_function_calls()
def cmd_dpbm(config: DpbmConfig) -> DpbmResult:
    return DpbmService(config).run()


@log_function_calls()
def cmd_tree(config: TreeConfig) -> TreeResult:
    return TreeService(config).run()
