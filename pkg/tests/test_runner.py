"""Scenario runner contracts: checks, artifacts, determinism, exit codes.

The heavy physics behind each scenario is covered by the module tests and
by the acceptance suite; here the runs are deliberately small and fast so
the plumbing (reports, files, error paths) can be exercised exhaustively.
"""

from __future__ import annotations

import json
import math

import pytest

from solitonlab.cli import main
from solitonlab.config import apply_overrides, default_config, parse_config
from solitonlab.evolution import StabilityError
from solitonlab.runner import FAILED_MARKER, _check, run_scenario


class TestCheckSemantics:
    def test_comparisons(self):
        assert _check("c", "d", 1.0, 2.0, "<").passed
        assert not _check("c", "d", 3.0, 2.0, "<").passed
        assert _check("c", "d", 2.0, 2.0, "<=").passed
        assert _check("c", "d", 20.0, 16.0, ">=").passed
        assert not _check("c", "d", 15.9, 16.0, ">=").passed

    def test_nan_never_passes(self):
        for op in ("<", "<=", ">", ">="):
            assert not _check("c", "d", math.nan, 1.0, op).passed

    def test_infinite_ratio_passes_a_floor(self):
        # exact zero residual on the coarse level gives an inf ratio
        assert _check("c", "d", math.inf, 16.0, ">=").passed


class TestRunScenario:
    def test_report_and_artifacts(self, tmp_path):
        cfg = default_config("verify-residuals")
        report = run_scenario(cfg, out_dir=tmp_path)
        assert report.passed
        assert report.step_count == 0
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["status"] == "passed"
        assert data["scenario"] == "verify-residuals"
        assert data["checks"] and all(
            set(c) >= {"criterion", "description", "value", "threshold",
                       "comparison", "passed"} for c in data["checks"])
        # the echoed config text reproduces the run exactly
        assert parse_config(data["config_text"]) == cfg

    def test_summary_has_one_line_per_check(self, tmp_path):
        report = run_scenario(default_config("verify-residuals"),
                              out_dir=tmp_path)
        lines = report.summary_lines()
        assert len([l for l in lines if "[PASS]" in l or "[FAIL]" in l]) \
            == len(report.checks)

    def test_failing_checks_do_not_abort(self, tmp_path):
        cfg = apply_overrides(default_config("verify-residuals"),
                              ["grid.n=64"])
        report = run_scenario(cfg, out_dir=tmp_path)
        assert not report.passed
        assert not (tmp_path / FAILED_MARKER).exists()
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["status"] == "failed"

    def test_abort_leaves_a_marker(self, tmp_path):
        cfg = apply_overrides(
            default_config("soliton-propagation"),
            ["run.dt=0.2", "grid.n=256", "run.T=0.5"])
        with pytest.raises(StabilityError):
            run_scenario(cfg, out_dir=tmp_path)
        marker = (tmp_path / FAILED_MARKER).read_text()
        assert "soliton-propagation" in marker
        assert "StabilityError" in marker
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["status"] == "aborted"

    def test_success_clears_a_stale_marker(self, tmp_path):
        (tmp_path / FAILED_MARKER).write_text("left over\n")
        run_scenario(default_config("verify-residuals"), out_dir=tmp_path)
        assert not (tmp_path / FAILED_MARKER).exists()

    def test_unknown_scenario_refused(self, tmp_path):
        from solitonlab.config import ConfigError, ScenarioConfig
        with pytest.raises(ConfigError, match="unknown scenario"):
            run_scenario(ScenarioConfig("warp-drive", {}),
                         out_dir=tmp_path / "nope")
        assert not (tmp_path / "nope").exists()

    def test_evolving_scenario_writes_series_and_snapshots(self, tmp_path):
        cfg = apply_overrides(default_config("free-spreading"),
                              ["grid.n=512", "run.T=2.0"])
        report = run_scenario(cfg, out_dir=tmp_path)
        assert report.step_count > 0
        for name in ("observables.csv", "soliton_reference.csv", "plot.gp",
                     "snapshot_initial.csv", "snapshot_final.csv"):
            assert (tmp_path / name).exists(), name


class TestDeterminism:
    def test_perturbation_repeat_is_byte_identical(self, tmp_path):
        cfg = apply_overrides(default_config("perturbation-stability"),
                              ["grid.n=256", "run.T=2.0"])
        report = run_scenario(cfg, out_dir=tmp_path)
        assert report.passed
        first = (tmp_path / "observables.csv").read_bytes()
        repeat = (tmp_path / "observables_repeat.csv").read_bytes()
        assert first == repeat

    def test_same_seed_same_report(self, tmp_path):
        cfg = apply_overrides(default_config("perturbation-stability"),
                              ["grid.n=256", "run.T=1.0"])
        r1 = run_scenario(cfg, out_dir=tmp_path / "a")
        r2 = run_scenario(cfg, out_dir=tmp_path / "b")
        assert [c.value for c in r1.checks] == [c.value for c in r2.checks]
        assert (tmp_path / "a" / "observables.csv").read_bytes() \
            == (tmp_path / "b" / "observables.csv").read_bytes()


class TestParamSweep:
    def test_cases_keep_the_given_order(self, tmp_path):
        cfg = apply_overrides(
            default_config("param-sweep"),
            ["sweep.values=0.6,0.4", "run.T=2.0", "grid.n=256",
             "sweep.workers=2"])
        report = run_scenario(cfg, out_dir=tmp_path)
        summary = (tmp_path / "sweep_summary.csv").read_text().splitlines()
        assert summary[0].startswith("case,")
        assert summary[1].split(",")[1] == "0.6"
        assert summary[2].split(",")[1] == "0.4"
        assert (tmp_path / "case_00_params.m_0.6" / "report.json").exists()
        assert (tmp_path / "case_01_params.m_0.4" / "report.json").exists()
        assert len(report.details["cases"]) == 2
        assert [c["params.m"] for c in report.details["cases"]] == [0.6, 0.4]


class TestCliExitCodes:
    def test_pass_is_zero(self, tmp_path, capsys):
        code = main(["verify-residuals", "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "[PASS]" in out

    def test_failed_checks_are_one(self, tmp_path, capsys):
        code = main(["verify-residuals", "--out", str(tmp_path),
                     "--override", "grid.n=64"])
        assert code == 1
        assert "[FAIL]" in capsys.readouterr().out

    def test_config_error_is_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.ini"
        bad.write_text("[run]\nscenario = verify-residuals\nbanana = 1\n")
        code = main(["verify-residuals", "--config", str(bad),
                     "--out", str(tmp_path)])
        assert code == 2
        assert "configuration error" in capsys.readouterr().err

    def test_missing_config_file_is_two(self, tmp_path, capsys):
        code = main(["verify-residuals", "--config",
                     str(tmp_path / "absent.ini"), "--out", str(tmp_path)])
        assert code == 2

    def test_scenario_mismatch_is_two(self, tmp_path, capsys):
        cfg = tmp_path / "other.ini"
        cfg.write_text("[run]\nscenario = free-spreading\n")
        code = main(["yukawa-oracle", "--config", str(cfg),
                     "--out", str(tmp_path)])
        assert code == 2
        assert "mismatch" in capsys.readouterr().err

    def test_numerical_abort_is_three(self, tmp_path, capsys):
        code = main(["soliton-propagation", "--out", str(tmp_path),
                     "--override", "run.dt=0.2",
                     "--override", "grid.n=256",
                     "--override", "run.T=0.5"])
        assert code == 3
        assert "numerical abort" in capsys.readouterr().err
        assert (tmp_path / FAILED_MARKER).exists()
