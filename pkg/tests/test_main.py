"""
@Author: li
@Email: lijianqiao2906@live.com
@FileName: test_main.py
@DateTime: 2025/06/30 17:00:00
@Docs: 命令行入口与退出码
"""

import json

import pytest

from app.core.exceptions import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, ConfigValidationError, ParameterError
from app.main import main
from app.services import SimulateService, TreeService


def write_config(tmp_path, text: str):
    path = tmp_path / "config.toml"
    path.write_text(text, encoding="utf-8")
    return path


def test_tree_command(tmp_path):
    config = write_config(tmp_path, "p_grid = [0.5]\ndepths = [1]\n")
    out = tmp_path / "out"
    assert main(["tree", "--config", str(config), "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "tree_report.json").read_text(encoding="utf-8"))
    assert report["entries"][0]["rates"]["depth1"] == pytest.approx(2.5)
    assert (out / "tree.csv").exists()


def test_simulate_command_with_overrides(tmp_path):
    out = tmp_path / "out"
    code = main(["simulate", "--paths", "50", "--step", "0.002", "--seed", "3", "--format", "json", "--out", str(out)])
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["provenance"]["seed"] == 3
    assert (out / "survival.json").exists()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["unknown"],
        ["tree", "--threads", "many"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert capsys.readouterr().out.strip()


def test_invalid_config_file(tmp_path):
    config = write_config(tmp_path, "p_grid = [0.5]\ndepth = [1]\n")
    assert main(["tree", "--config", str(config), "--out", str(tmp_path)]) == EXIT_USAGE


def test_malformed_toml(tmp_path):
    config = write_config(tmp_path, "p_grid = [0.5\n")
    assert main(["tree", "--config", str(config)]) == EXIT_USAGE


def test_missing_config_file(tmp_path):
    assert main(["tree", "--config", str(tmp_path / "absent.toml")]) == EXIT_USAGE


def test_failed_check_exit_code(tmp_path):
    config = write_config(tmp_path, "criteria = [3]\npasting_points = 2\npasting_tol = 1e-14\n")
    out = tmp_path / "out"
    assert main(["check", "--config", str(config), "--out", str(out)]) == EXIT_CHECK_FAILED
    assert (out / "check_report.json").exists()


class TestLoadConfig:
    def test_overrides_take_precedence(self, tmp_path):
        config = write_config(tmp_path, "paths = 10\nseed = 1\n")
        loaded = SimulateService.load_config(config, {"paths": 20, "seed": None})
        assert (loaded.paths, loaded.seed) == (20, 1)

    def test_unused_overrides_are_ignored(self):
        loaded = TreeService.load_config(None, {"seed": 5, "paths": 10})
        assert not hasattr(loaded, "seed")

    def test_validation_error_is_wrapped(self, tmp_path):
        config = write_config(tmp_path, "paths = 0\n")
        with pytest.raises(ConfigValidationError) as exc_info:
            SimulateService.load_config(config)
        assert exc_info.value.errors[0]["loc"] == ["paths"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParameterError):
            SimulateService.load_config(tmp_path / "absent.toml")
