import json

import numpy as np
import pytest

from mhdbayes.cli import build_parser, main, resolve_config, validate_config
from mhdbayes.datasets import load_dataset


class TestDatasets:
    def test_bundled_newcomb(self):
        ds = load_dataset("bundled:newcomb")
        assert len(ds) == 66
        assert ds.values.min() == -44.0
        assert int(np.sum(ds.values < 0)) == 2

    def test_plain_csv(self, tmp_path):
        p = tmp_path / "vals.csv"
        p.write_text("1.0\n2.0\n")
        assert np.array_equal(load_dataset(str(p)).values, [1.0, 2.0])

    def test_header_is_skipped(self, tmp_path):
        p = tmp_path / "vals.csv"
        p.write_text("value\n3.5\n4.5\n")
        assert np.array_equal(load_dataset(str(p)).values, [3.5, 4.5])

    def test_malformed_line_cites_number(self, tmp_path):
        p = tmp_path / "vals.csv"
        p.write_text("1.0\n2.0\nabc\n")
        with pytest.raises(ValueError, match="line 3"):
            load_dataset(str(p))

    def test_empty_file(self, tmp_path):
        p = tmp_path / "vals.csv"
        p.write_text("")
        with pytest.raises(ValueError, match="no numeric"):
            load_dataset(str(p))

    def test_unknown_bundle(self):
        with pytest.raises(ValueError, match="unknown bundled"):
            load_dataset("bundled:nope")


def fit_args(tmp_path, *extra):
    out = tmp_path / "report.json"
    return ["fit", "--data", "bundled:newcomb", "--estimator", "mhb",
            "--n-boot", "0", "--seed", "7", "--out", str(out), *extra], out


class TestConfig:
    def test_round_trip_is_idempotent(self):
        args = build_parser().parse_args(
            ["fit", "--data", "bundled:newcomb", "--seed", "3"])
        config = resolve_config(args)
        clone = json.loads(json.dumps(config))
        assert validate_config(clone) == config

    def test_rejects_unknown_fields(self):
        with pytest.raises(ValueError, match="invalid configuration"):
            validate_config({"command": "fit", "family": "gaussian",
                             "prior": {"mode": "fixed", "alpha": 0.07},
                             "seed": 0, "bogus": 1})

    def test_rejects_missing_data(self):
        with pytest.raises(ValueError, match="invalid configuration"):
            validate_config({"command": "fit", "family": "gaussian",
                             "prior": {"mode": "fixed", "alpha": 0.07}, "seed": 0})

    def test_workers_default_comes_from_environment(self, monkeypatch):
        monkeypatch.setenv("MHDBAYES_WORKERS", "4")
        args = build_parser().parse_args(["fit", "--data", "bundled:newcomb"])
        assert resolve_config(args)["workers"] == 4
        args = build_parser().parse_args(
            ["fit", "--data", "bundled:newcomb", "--workers", "2"])
        assert resolve_config(args)["workers"] == 2


class TestRunFit:
    def test_mhb_fit_writes_report(self, tmp_path, capsys):
        argv, out = fit_args(tmp_path)
        assert main(argv) == 0
        report = json.loads(out.read_text())
        assert report["schema_version"] == 1
        assert report["config"]["seed"] == 7
        theta = report["results"]["mhb"]["theta_hat"]
        assert theta[0] == pytest.approx(27.79, abs=0.05)
        assert theta[1] == pytest.approx(4.96, abs=0.05)

    def test_deterministic_modulo_timestamp(self, tmp_path):
        argv1, out1 = fit_args(tmp_path, "--alpha", "0.07")
        main(argv1)
        first = json.loads(out1.read_text())
        argv2, out2 = fit_args(tmp_path, "--alpha", "0.07")
        main(argv2)
        second = json.loads(out2.read_text())
        first.pop("timestamp"), second.pop("timestamp")
        assert first == second

    def test_infeasible_sigma_bounds_exit_2(self, tmp_path, capsys):
        argv, _ = fit_args(tmp_path, "--sigma-bounds", "0.001,0.01")
        assert main(argv) == 2
        assert "numerical failure" in capsys.readouterr().err

    def test_missing_file_exit_1(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        argv = ["fit", "--data", str(tmp_path / "nope.csv"), "--n-boot", "0",
                "--out", str(out)]
        assert main(argv) == 1

    def test_malformed_csv_exit_1(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("1.0\n2.0\nabc\n")
        argv = ["fit", "--data", str(p), "--n-boot", "0"]
        assert main(argv) == 1
        assert "line 3" in capsys.readouterr().err

    def test_usage_error_maps_to_exit_1(self, capsys):
        assert main(["fit", "--data", "bundled:newcomb", "--estimator", "nope"]) == 1


class TestRunStudiesAndDump:
    def test_posterior_dump_csv(self, tmp_path):
        out = tmp_path / "samples.csv"
        argv = ["posterior-dump", "--data", "bundled:newcomb",
                "--n-samples", "100", "--seed", "3", "--format", "csv",
                "--out", str(out)]
        assert main(argv) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "index,mu,sigma"
        assert len(lines) == 101

    def test_robustness_study_csv(self, tmp_path):
        out = tmp_path / "rob.csv"
        argv = ["robustness", "--reps", "2", "--n", "120", "--z-grid", "10,30",
                "--estimators", "mle", "--seed", "5", "--format", "csv",
                "--k", "30", "--out", str(out)]
        assert main(argv) == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1 + 2 * 2 * 1

    def test_bvm_json_to_stdout(self, tmp_path, capsys):
        data = np.random.default_rng(0).normal(0, 1, 300)
        p = tmp_path / "d.csv"
        p.write_text("\n".join(str(v) for v in data) + "\n")
        argv = ["bvm", "--data", str(p), "--n-samples", "150", "--seed", "2",
                "--k", "40"]
        assert main(argv) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["results"]["study"] == "bvm"
        assert len(report["results"]["rows"]) == 2
