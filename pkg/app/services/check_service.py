"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: check_service.py
@DateTime: 2025/06/29 09:00:00
@Docs: check 子命令 - 逐项运行验收判据并输出 check_report.json
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from app.analytics.value_function import (
    ValueContext,
    closed_form_expected_time,
    expected_decision_time,
    vhat,
)
from app.analytics.verification import (
    pde_residual,
    smooth_pasting_gap,
    survival_laplace_check,
    verification_inequality,
)
from app.core.config import settings
from app.core.enums import CheckStatus, CommandName, ExtremeKind, StrategyKind
from app.core.exceptions import AcceptanceCheckError, MajorityError
from app.majority_tree.tree import brownian_depth1_cost, optimal_cost
from app.schemas.experiment import CheckConfig, DpbmConfig, SimulateConfig, StrategyConfig
from app.schemas.results import CheckItem, CheckReport
from app.simulation.allocation import check_epsilon_approximation, random_allocation_record
from app.simulation.batch_runner import BatchTask
from app.simulation.controlled import ControlledBatch, simulate_controlled_batch
from app.simulation.diffusion import DiffusionSpec
from app.simulation.perturbed import dpbm_parameters
from app.simulation.rng import RngStream
from app.simulation.state import TripleState, decision_value_probability
from app.simulation.statistics import ks_two_sample, survival_curve
from app.simulation.strategies import RunTheMiddle, strategy_from_config
from app.utils.common_utils import bernoulli_standard_error, geometric_grid, standard_error
from app.utils.export import outputs_digest
from app.utils.logger import log_function_calls, logger

from .base_service import BaseService
from .experiment_service import DpbmService, SimulateService

# 随机抽点使用的流编号段，与仿真批次的流段不重叠
_SAMPLING_STREAM = 900_000

# 准则 1 的测试点：两个一般内部点、每个切换平面上各一个、一个靠近边界的点
MC_POINTS = (
    (0.3, 0.5, 0.7),
    (0.2, 0.4, 0.9),
    (0.4, 0.4, 0.7),
    (0.3, 0.6, 0.6),
    (0.1, 0.5, 0.95),
)
INVARIANCE_POINTS = ((0.3, 0.5, 0.7), (0.1, 0.2, 0.6), (0.5, 0.8, 0.9))
SIMULATE_X0 = (0.3, 0.5, 0.7)
DPBM_X0 = (0.2, 0.5, 0.8)
BASELINES = (
    StrategyConfig(kind=StrategyKind.RUN_TWO_THEN_THIRD),
    StrategyConfig(kind=StrategyKind.ROUND_ROBIN, block=0.01),
    StrategyConfig(kind=StrategyKind.RUN_EXTREME, which=ExtremeKind.MAX),
)
# 决策值不变性覆盖全部内置策略，未决策路径按删失计
INVARIANCE_STRATEGIES = (
    StrategyConfig(kind=StrategyKind.RUN_THE_MIDDLE),
    StrategyConfig(kind=StrategyKind.RUN_TWO_THEN_THIRD),
    StrategyConfig(kind=StrategyKind.ROUND_ROBIN, block=0.01),
    StrategyConfig(kind=StrategyKind.RUN_EXTREME, which=ExtremeKind.MAX),
    StrategyConfig(kind=StrategyKind.RUN_EXTREME, which=ExtremeKind.MIN),
    StrategyConfig(kind=StrategyKind.EPSILON_STRATEGY, epsilon=0.01),
)
EPSILONS = (0.1, 0.01)
QUADRATURE_TOL = 1e-6
EXTRAPOLATION_TOL = 1e-4
R1_HALF = 12.0 * math.log(2.0) - 6.0
MIN_GAP = 0.02


@dataclass
class Outcome:
    """单项判据的结果"""

    passed: bool
    metrics: dict[str, Any] = field(default_factory=dict)
    message: str | None = None


class CheckService(BaseService[CheckConfig]):
    """验收判据集合

    每项判据独立运行，异常被记为失败而不中断后续判据。
    """

    command = CommandName.CHECK
    config_type = CheckConfig

    def __init__(self, config: CheckConfig):
        super().__init__(config)
        self.ctx = ValueContext()
        self.spec = DiffusionSpec.brownian()
        self.criteria: dict[int, tuple[str, Callable[[], Outcome]]] = {
            1: ("value_function_vs_monte_carlo", self.check_value_monte_carlo),
            2: ("pde_identity", self.check_pde_identity),
            3: ("smooth_pasting", self.check_smooth_pasting),
            4: ("boundary_condition", self.check_boundary),
            5: ("single_diffusion_reduction", self.check_single_diffusion),
            6: ("stochastic_minimality", self.check_dominance),
            7: ("decision_value_invariance", self.check_decision_invariance),
            8: ("dpbm_equivalence", self.check_dpbm),
            9: ("epsilon_approximation", self.check_epsilon),
            10: ("tree_costs", self.check_tree),
            11: ("laplace_relation", self.check_laplace),
            12: ("reproducibility", self.check_reproducibility),
        }

    # ---------- 公共工具 ----------

    def sampling_generator(self, criterion: int) -> np.random.Generator:
        return RngStream(self.config.seed, _SAMPLING_STREAM + criterion).generator()

    def middle_batch(self, x0: tuple[float, float, float], arm: int, n_paths: int | None = None) -> ControlledBatch:
        """居中策略在标准布朗运动下的决策时间样本"""
        config = self.config
        state = TripleState.of(x0)

        def simulate(task: BatchTask) -> ControlledBatch:
            return simulate_controlled_batch(
                self.spec, state, RunTheMiddle(), config.step, task.rng, task.n_paths, horizon=config.horizon
            )

        return ControlledBatch.concat(self.runner(arm).run(n_paths or config.paths, simulate))

    def simulate_service(self, **overrides: Any) -> SimulateService:
        config = self.config
        data: dict[str, Any] = {
            "seed": config.seed,
            "paths": config.paths,
            "step": config.step,
            "horizon": config.horizon,
            "threads": config.threads,
            "format": config.format,
            "out": config.out,
        }
        return SimulateService(SimulateConfig(**(data | overrides)))

    @staticmethod
    def _random_interior(generator: np.random.Generator) -> tuple[float, float, float]:
        """各分量之间、与端点之间至少相隔 MIN_GAP 的有序内部点"""
        while True:
            x = np.sort(generator.uniform(MIN_GAP, 1.0 - MIN_GAP, 3))
            if np.all(np.diff(x) >= MIN_GAP):
                return (float(x[0]), float(x[1]), float(x[2]))

    @staticmethod
    def _random_plane(generator: np.random.Generator) -> tuple[float, float, float]:
        """切换平面 x1 = x2 或 x2 = x3 上的点"""
        while True:
            a, b = np.sort(generator.uniform(MIN_GAP, 1.0 - MIN_GAP, 2))
            if b - a >= MIN_GAP:
                break
        a, b = float(a), float(b)
        return (a, a, b) if generator.random() < 0.5 else (a, b, b)

    @staticmethod
    def _random_decided(generator: np.random.Generator) -> tuple[float, float, float]:
        """两个分量位于同一端点的 D 中的点"""
        edge = float(generator.integers(2))
        free = int(generator.integers(3))
        values = [edge, edge, edge]
        values[free] = float(generator.uniform(0.0, 1.0))
        return (values[0], values[1], values[2])

    # ---------- 判据 ----------

    def check_value_monte_carlo(self) -> Outcome:
        config = self.config
        worst = 0.0
        failures = []
        for k, x in enumerate(MC_POINTS):
            batch = self.middle_batch(x, arm=100 + k)
            for r in config.r_values:
                discounted = np.exp(-r * batch.times)
                estimate = float(np.mean(discounted))
                se = standard_error(discounted)
                analytic = vhat(x, r, self.ctx)
                z = abs(estimate - analytic) / se if se > 0 else 0.0
                worst = max(worst, z)
                if z > config.sigma_se:
                    failures.append({"x": x, "r": r, "vhat": analytic, "estimate": estimate, "se": se})
        return Outcome(
            passed=not failures,
            metrics={"max_z": worst, "points": len(MC_POINTS), "paths": config.paths},
            message=f"{len(failures)} 个 (x, r) 超出 {config.sigma_se}·SE: {failures}" if failures else None,
        )

    def check_pde_identity(self) -> Outcome:
        config = self.config
        generator = self.sampling_generator(2)
        worst = 0.0
        worst_inequality = -math.inf
        for _ in range(config.random_points):
            x = self._random_interior(generator)
            for i in (1, 2, 3):
                worst = max(worst, abs(pde_residual(x, 1.0, i, self.ctx)))
            worst_inequality = max(worst_inequality, verification_inequality(x, 1.0, self.ctx))
        passed = worst <= config.residual_tol and worst_inequality <= config.residual_tol
        return Outcome(
            passed=passed,
            metrics={"max_residual": worst, "max_inequality": worst_inequality, "points": config.random_points},
            message=None if passed else f"PDE 残差 {worst:.3g} 或验证不等式 {worst_inequality:.3g} 超出容差",
        )

    def check_smooth_pasting(self) -> Outcome:
        config = self.config
        generator = self.sampling_generator(3)
        points = [self._random_plane(generator) for _ in range(config.pasting_points)]
        worst = max(smooth_pasting_gap(x, 1.0, self.ctx) for x in points)
        passed = worst <= config.pasting_tol
        return Outcome(
            passed=passed,
            metrics={"max_gap": worst, "points": config.pasting_points},
            message=None if passed else f"光滑粘合差 {worst:.3g} 超出容差 {config.pasting_tol}",
        )

    def check_boundary(self) -> Outcome:
        generator = self.sampling_generator(4)
        points = [self._random_decided(generator) for _ in range(self.config.random_points)]
        bad = [x for x in points for r in self.config.r_values if vhat(x, r, self.ctx) != 1.0]
        return Outcome(
            passed=not bad,
            metrics={"points": len(points), "violations": len(bad)},
            message=f"v̂ 在 D 上不等于 1: {bad[:5]}" if bad else None,
        )

    def check_single_diffusion(self) -> Outcome:
        eigen = self.ctx.eigen(1.0)
        worst = 0.0
        for k in range(1, 100):
            u = k / 100
            expected = float(eigen.h_plus(u)) + float(eigen.h_minus(u))
            worst = max(worst, abs(vhat((0.0, u, 1.0), 1.0, self.ctx) - expected))

        richardson = expected_decision_time((0.0, 0.5, 1.0), self.ctx)
        closed = closed_form_expected_time((0.0, 0.5, 1.0))
        interior_gap = abs(closed_form_expected_time(SIMULATE_X0) - expected_decision_time(SIMULATE_X0, self.ctx))
        batch = self.middle_batch((0.0, 0.5, 1.0), arm=500)
        z = abs(batch.mean_time - 0.25) / batch.time_standard_error

        checks = {
            "quadrature": worst <= QUADRATURE_TOL,
            "richardson": abs(richardson - 0.25) <= EXTRAPOLATION_TOL,
            "closed_form": abs(closed - 0.25) <= QUADRATURE_TOL,
            "closed_form_vs_richardson": interior_gap <= EXTRAPOLATION_TOL,
            "monte_carlo": z <= self.config.sigma_se,
        }
        failed = [name for name, ok in checks.items() if not ok]
        return Outcome(
            passed=not failed,
            metrics={
                "max_abs_error": worst,
                "richardson": richardson,
                "closed_form": closed,
                "interior_gap": interior_gap,
                "mc_mean": batch.mean_time,
                "mc_z": z,
            },
            message=f"未通过: {failed}" if failed else None,
        )

    def check_dominance(self) -> Outcome:
        config = self.config
        strategies = [StrategyConfig(kind=StrategyKind.RUN_THE_MIDDLE), *BASELINES]
        service = self.simulate_service(x0=SIMULATE_X0, strategies=strategies)
        x0 = TripleState.of(SIMULATE_X0)
        grid = geometric_grid(config.step, config.horizon, settings.SURVIVAL_GRID_POINTS)
        built = [strategy_from_config(sc) for sc in strategies]
        batches = [service.simulate_strategy(self.spec, x0, s, 600 + arm) for arm, s in enumerate(built)]
        curves = [survival_curve(b.times, grid) for b in batches]
        entries = service.dominance(built, batches, curves)
        violations = {e.baseline: e.violations for e in entries}
        failed = [name for name, count in violations.items() if count]
        return Outcome(
            passed=not failed,
            metrics={
                "violations": violations,
                "mean_times": {s.name: b.mean_time for s, b in zip(built, batches, strict=True)},
            },
            message=f"居中策略生存曲线高于基线: {failed}" if failed else None,
        )

    def check_decision_invariance(self) -> Outcome:
        config = self.config
        service = self.simulate_service()
        worst = 0.0
        failures = []
        censored: dict[str, int] = {}
        for k, point in enumerate(INVARIANCE_POINTS):
            x0 = TripleState.of(point)
            theory = decision_value_probability(x0)
            for arm, sc in enumerate(INVARIANCE_STRATEGIES):
                strategy = strategy_from_config(sc)
                batch = service.simulate_strategy(self.spec, x0, strategy, 700 + 10 * k + arm)
                censored[strategy.name] = censored.get(strategy.name, 0) + batch.censor_count
                decided = len(batch) - batch.censor_count
                if decided == 0:
                    failures.append({"x0": point, "strategy": strategy.name, "frequency": None})
                    continue
                se = bernoulli_standard_error(theory, decided)
                z = abs(batch.decision_frequency - theory) / se if se > 0 else 0.0
                worst = max(worst, z)
                if z > config.sigma_se:
                    failures.append({"x0": point, "strategy": strategy.name, "frequency": batch.decision_frequency})
        if any(censored.values()):
            logger.warning("决策值不变性检查存在删失路径", censored=censored)
        return Outcome(
            passed=not failures,
            metrics={
                "max_z": worst,
                "strategies": [strategy_from_config(sc).name for sc in INVARIANCE_STRATEGIES],
                "censored": censored,
            },
            message=f"决策值频率偏离理论值: {failures}" if failures else None,
        )

    def check_dpbm(self) -> Outcome:
        config = self.config
        x0 = TripleState.of(DPBM_X0)
        pspec, interval = dpbm_parameters(x0)
        p_values = []
        for k in range(config.dpbm_replications):
            seed = config.seed + 2 * k + 1
            service = DpbmService(
                DpbmConfig(
                    seed=seed,
                    middle_seed=seed + 2 * config.dpbm_replications,
                    paths=config.dpbm_paths,
                    x0=DPBM_X0,
                    step=config.step,
                    horizon=config.horizon,
                    threads=config.threads,
                    out=config.out,
                )
            )
            dpbm = service.dpbm_sample(pspec, interval, config.dpbm_paths, arm=0)
            middle = service.middle_sample(x0, config.dpbm_paths, service.config.resolved_middle_seed)
            p_values.append(ks_two_sample(dpbm.times, middle).p_value)
        share = sum(p > 0.05 for p in p_values) / len(p_values)
        passed = share >= config.dpbm_min_pass
        return Outcome(
            passed=passed,
            metrics={"pass_share": share, "min_p_value": min(p_values), "replications": len(p_values)},
            message=None if passed else f"KS 通过比例 {share:.2f} 低于 {config.dpbm_min_pass}",
        )

    def check_epsilon(self) -> Outcome:
        generator = self.sampling_generator(9)
        failures = []
        worst_ratio = 0.0
        for k in range(self.config.allocation_records):
            record = random_allocation_record(generator)
            for epsilon in EPSILONS:
                result = check_epsilon_approximation(record, epsilon)
                worst_ratio = max(worst_ratio, result.sup_deviation / epsilon)
                if not result.passed:
                    failures.append({"record": k, "epsilon": epsilon, "violations": result.violations})
        return Outcome(
            passed=not failures,
            metrics={"max_deviation_over_epsilon": worst_ratio, "records": self.config.allocation_records},
            message=f"ε 逼近失败: {failures[:5]}" if failures else None,
        )

    def check_tree(self) -> Outcome:
        n = self.config.tree_points + 1
        mismatched = []
        not_sub = []
        above_r1 = []
        for k in range(1, n):
            p = Fraction(k, n)
            first = optimal_cost(1, p, exact=True)
            second = optimal_cost(2, p, exact=True)
            if first.exact != 2 * (1 + p * (1 - p)):
                mismatched.append(float(p))
            if second.exact is None or first.exact is None or second.exact > first.exact**2:
                not_sub.append(float(p))
            if brownian_depth1_cost(float(p)) > first.cost:
                above_r1.append(float(p))
        half_gap = abs(brownian_depth1_cost(0.5) - R1_HALF)
        passed = not (mismatched or not_sub or above_r1) and half_gap <= 1e-10
        return Outcome(
            passed=passed,
            metrics={
                "points": n - 1,
                "r1_mismatch": mismatched,
                "not_sub_multiplicative": not_sub,
                "R1_above_r1": above_r1,
                "R1_half_error": half_gap,
            },
            message=None if passed else "树代价判据未通过",
        )

    def check_laplace(self) -> Outcome:
        batch = self.middle_batch(SIMULATE_X0, arm=1100)
        result = survival_laplace_check(SIMULATE_X0, 1.0, batch.times, self.ctx, censored=batch.censored)
        band = self.config.sigma_se * result.standard_error + result.tail_bound
        passed = abs(result.residual) <= band
        return Outcome(
            passed=passed,
            metrics={
                "analytic": result.analytic,
                "empirical": result.empirical,
                "standard_error": result.standard_error,
                "tail_bound": result.tail_bound,
            },
            message=None if passed else f"Laplace 关系偏差 {result.residual:.3g} 超出 {band:.3g}",
        )

    def check_reproducibility(self) -> Outcome:
        config = self.config
        digests: dict[str, str] = {}
        for workers in config.reproducibility_workers:
            service = self.simulate_service(
                paths=config.reproducibility_paths,
                threads=workers,
                out=config.out / "reproducibility" / f"workers{workers}",
            )
            service.run()
            digests[str(workers)] = outputs_digest(service.written)
        passed = len(set(digests.values())) == 1
        return Outcome(
            passed=passed,
            metrics={"digests": digests},
            message=None if passed else "不同工作线程数的输出不一致",
        )

    # ---------- 执行 ----------

    def run_criterion(self, criterion: int) -> CheckItem:
        name, check = self.criteria[criterion]
        logger.info(f"验收项 {criterion}: {name}")
        try:
            outcome = check()
        except MajorityError as e:
            logger.error(f"验收项 {criterion} 执行出错: {e.message}", detail=e.detail)
            outcome = Outcome(passed=False, message=f"{e.__class__.__name__}: {e.message}")
        if not outcome.passed:
            logger.warning(f"验收项 {criterion} 未通过", reason=outcome.message)
        return CheckItem(
            criterion=criterion,
            name=name,
            status=CheckStatus.PASSED if outcome.passed else CheckStatus.FAILED,
            metrics=outcome.metrics,
            message=outcome.message,
        )

    def execute(self) -> CheckReport:
        selected = set(self.config.criteria)
        items = [
            self.run_criterion(c)
            if c in selected
            else CheckItem(criterion=c, name=self.criteria[c][0], status=CheckStatus.SKIPPED)
            for c in sorted(self.criteria)
        ]
        failed = [item.name for item in items if item.status == CheckStatus.FAILED.value]
        report = CheckReport(provenance=self.provenance(), passed=not failed, items=items)
        self.write_document(report, "check_report")
        if failed:
            raise AcceptanceCheckError(failed, detail={"report": str(self.written[-1])})
        return report


@log_function_calls()
def cmd_check(config: CheckConfig) -> CheckReport:
    return CheckService(config).run()
