"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: test_services.py
@DateTime: 2025/06/30 16:30:00
@Docs: 子命令服务的端到端测试（小规模）
"""

import json

import polars as pl
import pytest

from app.core.enums import CheckStatus, ExtremeKind, StrategyKind
from app.core.exceptions import AcceptanceCheckError, InvalidComparisonError
from app.schemas.experiment import CheckConfig, DpbmConfig, SimulateConfig, TreeConfig, ValueConfig
from app.services import CheckService, DpbmService, SimulateService, TreeService, ValueService
from app.services.check_service import INVARIANCE_STRATEGIES
from app.utils.export import outputs_digest


def simulate_config(out_dir, **overrides) -> SimulateConfig:
    data = {"paths": 400, "step": 2e-3, "out": out_dir}
    return SimulateConfig(**(data | overrides))


class TestSimulateService:
    def test_writes_summary_and_survival(self, out_dir):
        service = SimulateService(simulate_config(out_dir, raw_samples=True))
        result = service.run()

        assert [s.n_paths for s in result.summaries] == [400, 400]
        assert len(result.dominance) == 1
        assert result.decision_probability == pytest.approx(0.5)
        assert {p.name for p in service.written} == {"survival.csv", "samples.csv", "summary.json"}

        survival = pl.read_csv(out_dir / "survival.csv")
        assert survival.columns == ["schema_version", "strategy", "t", "survival", "standard_error"]
        assert survival["strategy"].n_unique() == 2
        samples = pl.read_csv(out_dir / "samples.csv")
        assert samples.height == 800

        summary = json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))
        assert summary["provenance"]["command"] == "simulate"
        assert "timestamp" not in summary["provenance"]

    def test_start_in_decision_set(self, out_dir):
        result = SimulateService(simulate_config(out_dir, x0=(1.0, 1.0, 0.2), paths=10)).run()
        assert all(s.mean_time == 0.0 for s in result.summaries)
        assert all(s.decision_frequency == 1.0 for s in result.summaries)
        assert result.decision_probability == 1.0

    def test_json_tables(self, out_dir):
        service = SimulateService(simulate_config(out_dir, paths=50, format="json"))
        service.run()
        assert (out_dir / "survival.json").exists()

    def test_config_hash_ignores_output_settings(self, tmp_path):
        a = SimulateService(simulate_config(tmp_path / "a", threads=1))
        b = SimulateService(simulate_config(tmp_path / "b", threads=4))
        c = SimulateService(simulate_config(tmp_path / "a", seed=1))
        assert a.config_hash == b.config_hash
        assert a.config_hash != c.config_hash

    def test_outputs_independent_of_threads(self, tmp_path, small_batches):
        digests = set()
        for workers in (1, 2, 8):
            service = SimulateService(simulate_config(tmp_path / f"w{workers}", paths=1_000, threads=workers))
            service.run()
            digests.add(outputs_digest(service.written))
        assert len(digests) == 1


class TestValueService:
    def test_value_table(self, out_dir):
        config = ValueConfig(
            points=[(0.3, 0.5, 0.7), (0.4, 0.4, 0.8), (1.0, 1.0, 0.5)],
            r_values=[1.0],
            out=out_dir,
        )
        result = ValueService(config).run()
        assert (result.rows, result.failures) == (3, 0)

        table = pl.read_csv(out_dir / "value.csv")
        interior, plane, decided = table.rows(named=True)
        assert 0.0 < interior["vhat"] < 1.0
        assert abs(interior["residual2"]) <= 1e-4
        assert interior["pasting_gap"] is None
        assert plane["residual1"] is None
        assert plane["pasting_gap"] <= 1e-3
        assert decided["vhat"] == 1.0
        assert decided["residual3"] is None

    def test_expected_time_column(self, out_dir):
        config = ValueConfig(points=[(0.0, 0.5, 1.0)], r_values=[0.5, 1.0], expected_time=True, out=out_dir)
        ValueService(config).run()
        table = pl.read_csv(out_dir / "value.csv")
        assert table.height == 2
        assert table["expected_time"].to_list() == pytest.approx([0.25, 0.25], abs=1e-4)


class TestDpbmService:
    def test_same_seed_is_rejected(self, out_dir):
        with pytest.raises(InvalidComparisonError):
            DpbmService(DpbmConfig(seed=5, middle_seed=5, out=out_dir))

    def test_report(self, out_dir):
        config = DpbmConfig(paths=300, step=2e-3, control_gaps=(0.05, 0.05), out=out_dir)
        result = DpbmService(config).run()
        assert result.middle_seed == config.seed + 1
        assert result.exit_interval == pytest.approx((-0.5, 0.5))
        assert result.test.n_a == result.test.n_b == 300
        assert result.control is not None
        assert (out_dir / "dpbm.json").exists()


def test_tree_service(out_dir):
    result = TreeService(TreeConfig(p_grid=[0.25, 0.5], exact=True, out=out_dir)).run()
    assert result.bracket == (2.25, 2.472)
    assert [e.sub_multiplicative for e in result.entries] == [True, True]
    assert result.entries[1].rates["depth1"] == pytest.approx(2.5)
    table = pl.read_csv(out_dir / "tree.csv")
    assert table.height == 4
    assert table["bound_ok"].all()


class TestCheckService:
    def test_selected_criteria_pass(self, out_dir):
        config = CheckConfig(criteria=[4, 10], random_points=10, tree_points=9, out=out_dir)
        report = CheckService(config).run()
        assert report.passed
        statuses = {item.criterion: item.status for item in report.items}
        assert statuses[4] == CheckStatus.PASSED.value
        assert statuses[10] == CheckStatus.PASSED.value
        assert statuses[1] == CheckStatus.SKIPPED.value
        assert (out_dir / "check_report.json").exists()

    def test_failed_criterion_raises_after_writing_report(self, out_dir):
        config = CheckConfig(criteria=[3], pasting_points=2, pasting_tol=1e-14, out=out_dir)
        with pytest.raises(AcceptanceCheckError) as exc_info:
            CheckService(config).run()
        assert exc_info.value.failed == ["smooth_pasting"]
        report = json.loads((out_dir / "check_report.json").read_text(encoding="utf-8"))
        assert report["passed"] is False

    def test_decision_invariance_covers_every_strategy(self):
        kinds = {sc.kind for sc in INVARIANCE_STRATEGIES}
        assert kinds == {k.value for k in StrategyKind}
        extremes = {sc.which for sc in INVARIANCE_STRATEGIES if sc.kind == StrategyKind.RUN_EXTREME.value}
        assert extremes == {ExtremeKind.MAX.value, ExtremeKind.MIN.value}

    @pytest.mark.slow
    def test_decision_invariance_passes(self, out_dir):
        config = CheckConfig(criteria=[7], paths=600, step=1e-3, sigma_se=4.0, out=out_dir)
        report = CheckService(config).run()
        item = next(item for item in report.items if item.criterion == 7)
        assert item.status == CheckStatus.PASSED.value
        assert len(item.metrics["strategies"]) == len(INVARIANCE_STRATEGIES)
        assert "run_extreme(min)" in item.metrics["censored"]
