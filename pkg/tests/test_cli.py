"""Tests for the trialcv command line."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from trialcv import ExperimentConfig, read_results_csv
from trialcv.cli import _build_parser, build_config, main

SMALL = [
    "--n-per-trial", "30",
    "--n-covariates", "4",
    "--n-correlated", "2",
    "--n-noise", "2",
    "--replicates", "1",
]


def _run(argv: list[str]) -> int:
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    code = excinfo.value.code
    return int(code) if code is not None else 0


def _lasso_config(tmp_path: Path) -> Path:
    path = tmp_path / "lasso.json"
    path.write_text(json.dumps({"grids": {"lasso": {"lambdas": [0.5, 0.1, 0.02]}}}), encoding="utf-8")
    return path


class TestBuildConfig:
    """Defaults < --fast < JSON file < flags."""

    def _config(self, argv: list[str]) -> ExperimentConfig:
        args = _build_parser().parse_args(argv)
        return build_config(args, "sim")

    def test_defaults(self) -> None:
        config = self._config(["run"])
        assert config == ExperimentConfig(mode="sim")

    def test_fast_profile(self) -> None:
        config = self._config(["run", "--fast"])
        assert config.profile == "fast"
        assert config.replicates == 30

    def test_file_overrides_fast_and_flags_override_file(self, tmp_path: Path) -> None:
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"replicates": 7, "sim": {"rho": 0.4}}), encoding="utf-8")
        config = self._config(["run", "--fast", "--config", str(path), "--rho", "0.2"])
        assert config.replicates == 7
        assert config.sim.rho == 0.2
        assert config.sim.n_per_trial == 300

    def test_list_flags(self) -> None:
        config = self._config(["run", "--models", "lasso,gbm", "--schemes", "loso"])
        assert [m.value for m in config.models] == ["lasso", "gbm"]
        assert config.schemes == ("loso",)

    def test_calibration_flags(self) -> None:
        config = self._config(["run", "--uncalibrated", "--fixed-threshold", "0.3"])
        assert not config.calibration.is_calibrated
        assert config.calibration.fixed_threshold == 0.3


class TestCommands:
    """End-to-end subcommands on tiny problems."""

    def test_simulate(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        out = tmp_path / "sim"
        assert _run(["simulate", "--out", str(out), "--seed", "4", *SMALL]) == 0
        lines = (out / "collection.csv").read_text().splitlines()
        assert lines[0] == "study_id,outcome,Z1,Z2,Z3,Z4,N1,N2"
        assert len(lines) == 1 + 5 * 30
        truth = json.loads((out / "truth.json").read_text())
        assert truth["seed"] == 4
        assert len(truth["trials"]) == 5
        assert str(out / "collection.csv") in capsys.readouterr().out

    def test_run_writes_results_summary_and_plots(self, tmp_path: Path) -> None:
        out = tmp_path / "run"
        argv = ["run", "--out", str(out), "--config", str(_lasso_config(tmp_path)), *SMALL]
        assert _run(argv) == 0
        table = read_results_csv(out / "results.csv")
        assert len(table.aggregates()) == 3
        assert (out / "summary.csv").exists()
        assert (out / "box_gen_r2.svg").read_text().count('<g class="box ') == 2

    def test_sweep_writes_line_chart(self, tmp_path: Path) -> None:
        out = tmp_path / "sweep"
        argv = [
            "sweep",
            "--out", str(out),
            "--config", str(_lasso_config(tmp_path)),
            "--sweep-axis", "rho",
            "--sweep-values", "0.2,0.8",
            *SMALL,
        ]
        assert _run(argv) == 0
        assert read_results_csv(out / "results.csv").sweep_values() == (0.2, 0.8)
        assert (out / "line_gen_r2.svg").read_text().count("<polyline") == 3

    def test_eval_and_replot(self, tmp_path: Path) -> None:
        data = tmp_path / "data"
        assert _run(["simulate", "--out", str(data), *SMALL]) == 0
        out = tmp_path / "eval"
        argv = [
            "eval",
            str(data / "collection.csv"),
            "--future", "future",
            "--out", str(out),
            "--config", str(_lasso_config(tmp_path)),
        ]
        assert _run(argv) == 0
        (out / "box_gen_r2.svg").unlink()
        assert _run(["plot", str(out / "results.csv")]) == 0
        assert (out / "box_gen_r2.svg").read_text().count('<g class="box ') == 2

    def test_config_error_exits_1(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        assert _run(["run", "--out", str(tmp_path), "--replicates", "0"]) == 1
        assert "Config error" in capsys.readouterr().err

    def test_unknown_future_exits_2(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        data = tmp_path / "data"
        assert _run(["simulate", "--out", str(data), *SMALL]) == 0
        argv = ["eval", str(data / "collection.csv"), "--future", "nope", "--out", str(tmp_path)]
        assert _run(argv) == 2
        assert "Unknown study id 'nope'" in capsys.readouterr().err

    def test_malformed_study_file_exits_2(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.csv"
        path.write_text("study_id,outcome,g\na,x,1\n", encoding="utf-8")
        assert _run(["eval", str(path), "--future", "a", "--out", str(tmp_path)]) == 2

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "--seed", "abc"],
            ["sweep", "--sweep-axis", "foo"],
            ["run", "--outcome-kind", "ordinal"],
        ],
    )
    def test_bad_flag_values_exit_1(
        self, argv: list[str], capsys: pytest.CaptureFixture[str]
    ) -> None:
        assert _run(argv) == 1
        assert "Config error" in capsys.readouterr().err

    def test_unwritable_output_exits_2(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        out = tmp_path / "sim"
        (out / "truth.json").mkdir(parents=True)
        assert _run(["simulate", "--out", str(out), *SMALL]) == 2
        assert "Cannot write" in capsys.readouterr().err

    def test_unwritable_study_file_exits_2(self, tmp_path: Path) -> None:
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")
        assert _run(["simulate", "--out", str(blocker / "sim"), *SMALL]) == 2
