"""The cdtk batch runner: reports, exit codes, sweeps, exports."""

import json
import subprocess
import sys

import numpy as np
import pytest

from cdtk.cli import CHECKS, RunConfig, main, run_check, run_sweep


def invoke(argv):
    """Run the CLI in-process, capturing stdout and the exit code."""
    import contextlib
    import io

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


class TestRun:
    def test_lichnerowicz_model(self):
        code, out = invoke(
            ["run", "--check", "lichnerowicz", "--space", "model:K=2,N=3", "--n", "2000"]
        )
        assert code == 0
        report = json.loads(out)
        assert report["passed"] is True
        assert report["cases"][0]["lambda1"] == pytest.approx(3.0, abs=1e-3)

    def test_evi_cos_model(self):
        code, out = invoke(
            ["run", "--check", "evi", "--model", "cos:K=1,N=1",
             "--x0", "0.7", "--dt", "1e-3", "--T", "3"]
        )
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_be_two_point_boundary(self):
        code, out = invoke(
            ["run", "--check", "be", "--space", "twopoint:q=1", "--K", "1.0", "--N", "2"]
        )
        report = json.loads(out)
        # the threshold case: margins sit at 0 within round-off
        assert abs(report["min_margin"]) <= 1e-9
        assert code == 0

    def test_failing_check_exits_one(self):
        code, out = invoke(
            ["run", "--check", "be", "--space", "twopoint:q=1", "--K", "1.5", "--N", "2"]
        )
        assert code == 1
        assert json.loads(out)["passed"] is False

    def test_unknown_check_exits_two(self):
        code, _ = invoke(["run", "--check", "nope"])
        assert code == 2

    def test_missing_space_exits_two(self):
        code, _ = invoke(["run", "--check", "lichnerowicz"])
        assert code == 2

    def test_reports_byte_identical(self):
        argv = ["run", "--check", "coeffs-identities", "--seed", "7"]
        _, out1 = invoke(argv)
        _, out2 = invoke(argv)
        assert out1 == out2

    def test_report_echoes_defaults(self):
        _, out = invoke(["run", "--check", "coeffs-identities"])
        cfg = json.loads(out)["config"]
        assert cfg["seed"] == 0 and cfg["n"] == 400 and cfg["dt"] == 1e-3

    def test_csv_output(self, tmp_path):
        csv_path = tmp_path / "cases.csv"
        json_path = tmp_path / "report.json"
        code, _ = invoke(
            ["run", "--check", "bonnet-myers", "--space", "model:K=2,N=3",
             "--out", str(json_path), "--csv", str(csv_path)]
        )
        assert code == 0
        header = csv_path.read_text().splitlines()[0]
        assert header.startswith("id,") and header.endswith("margin,passed")
        assert json.loads(json_path.read_text())["passed"] is True

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"check": "bonnet-myers", "space": "model:K=2,N=3", "n": 100}))
        code, out = invoke(["run", "--config", str(cfg), "--n", "200"])
        assert code == 0
        assert json.loads(out)["config"]["n"] == 200


class TestChecksCoverage:
    def test_every_registered_check_runs(self):
        # one cheap configuration per registered check
        fast = {"n": 64, "samples": 8, "pairs": 2, "t_points": 9, "z_points": 7, "T": 0.5}
        spaces = {
            "bishop-gromov": "model:K=2,N=3",
            "bonnet-myers": "model:K=2,N=3",
            "brunn-minkowski": "model:K=2,N=3",
            "w2-cross": "model:K=2,N=3",
            "cde": "model:K=2,N=3",
            "green-cde": "model:K=2,N=3",
            "nhwi": "model:K=2,N=3",
            "nlsi": "model:K=2,N=3",
            "ntalagrand": "model:K=2,N=3",
            "talagrand-lsi": "model:K=2,N=3",
            "be": "twopoint:q=1",
            "bl": "twopoint:q=1",
            "lichnerowicz": "model:K=2,N=3",
            "ric-nv": "model:K=2,N=3",
        }
        models = {
            "kn-sigma": "cos:K=1,N=1",
            "kn-green": "cos:K=1,N=1",
            "kn-pointwise": "cos:K=1,N=1",
            "evi": "cos:K=1,N=1",
            "contraction": "cos:K=1,N=1",
            "expansion": "cos:K=1,N=1",
        }
        for name in CHECKS:
            kwargs = dict(fast)
            if name in spaces:
                kwargs["space"] = spaces[name]
                if name in ("be", "bl"):
                    kwargs["K"] = 0.5
                    kwargs["N"] = 2.0
            if name in models:
                kwargs["model"] = models[name]
            report = run_check(RunConfig(check=name, **kwargs))
            assert report.cases, name
            assert report.passed, (name, report.min_margin)


class TestSweep:
    def test_two_point_be_threshold(self):
        cfg = RunConfig(check="be", space="twopoint:q=1", N=2.0)
        report = run_sweep(cfg, "K", 0.0, 3.0, resolution=1e-4)
        assert report.extra["crossing"] == pytest.approx(1.0, abs=1e-4)

    def test_no_crossing_reported(self):
        cfg = RunConfig(check="be", space="twopoint:q=1", N=2.0)
        report = run_sweep(cfg, "K", 0.0, 0.5, resolution=1e-3)
        assert report.extra["crossing"] is None
        assert report.passed  # entire range passing

    def test_cli_sweep_output(self):
        code, out = invoke(
            ["sweep", "--check", "be", "--space", "twopoint:q=1", "--N", "2",
             "--range", "K=0:3"]
        )
        assert code == 0
        report = json.loads(out)
        assert report["extra"]["crossing"] == pytest.approx(1.0, abs=1e-4)

    def test_bad_range_exits_two(self):
        code, _ = invoke(
            ["sweep", "--check", "be", "--space", "twopoint:q=1", "--N", "2",
             "--range", "K=zero:3"]
        )
        assert code == 2


class TestListAndExport:
    def test_list_checks(self):
        code, out = invoke(["list-checks"])
        assert code == 0
        for name in ("lichnerowicz", "cde", "evi", "be"):
            assert name in out

    def test_export_space_round_trip(self, tmp_path):
        path = tmp_path / "space.json"
        code, _ = invoke(
            ["export-space", "--space", "model:K=2,N=3", "--n", "64", "--out", str(path)]
        )
        assert code == 0
        data = json.loads(path.read_text())
        assert data["type"] == "weighted_interval"
        assert data["n"] == 64

    def test_console_entry_point(self):
        # the installed script must work end to end
        proc = subprocess.run(
            [sys.executable, "-m", "cdtk.cli", "list-checks"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "lichnerowicz" in proc.stdout
