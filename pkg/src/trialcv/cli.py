"""Command line interface for trialcv."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, NoReturn

import anyio

from .config import apply_fast_profile, config_from_dict, load_config
from .data import write_study_csv
from .errors import ConfigError, TrialCVError
from .plots import emit_svg_boxplot, emit_svg_linechart
from .results import (
    ResultTable,
    emit_csv,
    emit_summary_csv,
    read_results_csv,
    summarize,
    write_text,
)
from .runner import run_external, run_replicated_sim, run_sweep
from .simulate import simulate_collection, truth_sidecar
from .types import SWEEP_AXES, ExperimentConfig, Mode

logger = logging.getLogger("trialcv.cli")


class _Parser(argparse.ArgumentParser):
    """Bad flag values are configuration errors (exit 1)."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        print(f"Config error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _csv_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _float_list(value: str) -> list[float]:
    try:
        return [float(v) for v in _csv_list(value)]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {exc}") from exc


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON config file")
    common.add_argument("--out", default=None, help="Output directory")
    common.add_argument("--seed", type=int, default=None, help="Master seed (u64)")
    common.add_argument("--jobs", type=int, default=None, help="Concurrent replicates")
    common.add_argument(
        "--fast",
        action="store_true",
        help="Desk-scale profile: n_per_trial=300, forest_trees=100, replicates=30",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging to stderr")

    exp = common.add_argument_group("experiment")
    exp.add_argument("--replicates", type=int, default=None)
    exp.add_argument("--schemes", type=_csv_list, default=None, help="e.g. kfold,loso")
    exp.add_argument("--models", type=_csv_list, default=None, help="e.g. lasso,random_forest,gbm")
    exp.add_argument("--metrics", type=_csv_list, default=None)
    exp.add_argument("--k-folds", type=int, default=None)
    exp.add_argument("--forest-trees", type=int, default=None)
    exp.add_argument("--target-prevalence", type=float, default=None)
    exp.add_argument("--uncalibrated", action="store_true", default=None)
    exp.add_argument("--fixed-threshold", type=float, default=None)

    sim = common.add_argument_group("simulation")
    sim.add_argument("--outcome-kind", choices=["continuous", "binary"], default=None)
    sim.add_argument("--n-per-trial", type=int, default=None)
    sim.add_argument("--n-legacy", type=int, default=None)
    sim.add_argument("--beta", type=float, default=None)
    sim.add_argument("--rho", type=float, default=None)
    sim.add_argument("--n-covariates", type=int, default=None)
    sim.add_argument("--n-correlated", type=int, default=None)
    sim.add_argument("--n-noise", type=int, default=None)
    sim.add_argument("--noise-sd", type=float, default=None)
    sim.add_argument("--expose-latent", action="store_true", default=None)
    return common


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trialcv")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    sub.add_parser(
        "simulate",
        parents=[common],
        help="Write one simulated collection (legacy + future trial) and its truth sidecar.",
    )
    sub.add_parser("run", parents=[common], help="Replicated simulation: K-fold vs LOSO vs truth.")

    sweep = sub.add_parser("sweep", parents=[common], help="Replicated simulation over a parameter sweep.")
    sweep.add_argument("--sweep-axis", choices=list(SWEEP_AXES), default=None)
    sweep.add_argument("--sweep-values", type=_float_list, default=None)

    ev = sub.add_parser("eval", parents=[common], help="Evaluate an external multi-study CSV.")
    ev.add_argument("path", nargs="?", default=None, help="Study CSV (study_id,outcome,features...)")
    ev.add_argument("--future", default=None, help="Study id held out as the future trial")

    plot = sub.add_parser("plot", help="Re-render SVG figures from a results CSV.")
    plot.add_argument("results", help="results.csv written by run/sweep/eval")
    plot.add_argument("--out", default=None, help="Output directory (default: next to results)")
    plot.add_argument("--metric", default=None, help="Only this metric")
    plot.add_argument("--kind", choices=["auto", "box", "line"], default="auto")
    plot.add_argument("-v", "--verbose", action="store_true")
    return parser


def _flag_document(args: argparse.Namespace) -> dict[str, Any]:
    """Fields explicitly given on the command line, shaped like a JSON config."""
    doc: dict[str, Any] = {}
    top = {
        "replicates": "replicates",
        "schemes": "schemes",
        "models": "models",
        "metrics": "metrics",
        "k_folds": "k_folds",
        "forest_trees": "forest_trees",
        "jobs": "jobs",
        "seed": "master_seed",
        "out": "output_dir",
        "sweep_axis": "sweep_axis",
        "sweep_values": "sweep_values",
        "future": "future",
        "path": "external_path",
    }
    for attr, key in top.items():
        value = getattr(args, attr, None)
        if value is not None:
            doc[key] = value

    sim_keys = (
        "outcome_kind",
        "n_per_trial",
        "n_legacy",
        "beta",
        "rho",
        "n_covariates",
        "n_correlated",
        "n_noise",
        "noise_sd",
        "expose_latent",
    )
    sim = {k: getattr(args, k) for k in sim_keys if getattr(args, k, None) is not None}
    if sim:
        doc["sim"] = sim

    calibration: dict[str, Any] = {}
    if args.uncalibrated:
        calibration["mode"] = "uncalibrated"
    if args.target_prevalence is not None:
        calibration["target_prevalence"] = args.target_prevalence
    if args.fixed_threshold is not None:
        calibration["fixed_threshold"] = args.fixed_threshold
    if calibration:
        doc["calibration"] = calibration
    return doc


def build_config(args: argparse.Namespace, mode: Mode) -> ExperimentConfig:
    """Defaults < --fast < JSON file < explicit flags."""
    config = ExperimentConfig(mode=mode)
    if args.fast:
        config = apply_fast_profile(config)
    if args.config:
        config = load_config(args.config, config)
    config = config_from_dict(_flag_document(args), config)
    return replace(config, mode=mode)


def _write_outputs(table: ResultTable, out: Path, *, line_charts: bool) -> list[Path]:
    paths = [emit_csv(table, out / "results.csv")]
    summary = summarize(table)
    paths.append(emit_summary_csv(summary, out / "summary.csv"))
    paths.extend(_plot(table, out, None, "line" if line_charts else "box"))
    return paths


def _plot(table: ResultTable, out: Path, metric: str | None, kind: str) -> list[Path]:
    if kind == "auto":
        kind = "line" if table.sweep_values() else "box"
    metrics = [metric] if metric else list(table.metrics())
    paths: list[Path] = []
    for name in metrics:
        if metric is None and not any(r.value is not None for r in table.aggregates(name)):
            logger.warning("Skipping %s plot: no aggregate values", name)
            continue
        if kind == "line":
            paths.append(emit_svg_linechart(table, name, out / f"line_{name}.svg"))
        else:
            paths.append(emit_svg_boxplot(table, name, out / f"box_{name}.svg"))
    return paths


def _cmd_simulate(args: argparse.Namespace) -> list[Path]:
    config = build_config(args, "sim")
    sim = config.sim if args.seed is None else replace(config.sim, seed=args.seed)
    collection, future, truth = simulate_collection(sim)
    out = Path(config.output_dir)
    data_path = write_study_csv([*collection, future], out / "collection.csv")
    truth_path = write_text(out / "truth.json", json.dumps(truth_sidecar(truth), indent=2) + "\n")
    return [data_path, truth_path]


def _cmd_run(args: argparse.Namespace) -> list[Path]:
    config = build_config(args, "sim")
    table = anyio.run(run_replicated_sim, config)
    return _write_outputs(table, Path(config.output_dir), line_charts=False)


def _cmd_sweep(args: argparse.Namespace) -> list[Path]:
    config = build_config(args, "sweep")
    table = anyio.run(run_sweep, config)
    return _write_outputs(table, Path(config.output_dir), line_charts=True)


def _cmd_eval(args: argparse.Namespace) -> list[Path]:
    config = build_config(args, "external")

    async def _run() -> ResultTable:
        return await run_external(config, outcome_kind=args.outcome_kind)

    table = anyio.run(_run)
    return _write_outputs(table, Path(config.output_dir), line_charts=False)


def _cmd_plot(args: argparse.Namespace) -> list[Path]:
    results = Path(args.results)
    table = read_results_csv(results)
    out = Path(args.out) if args.out else results.parent
    return _plot(table, out, args.metric, args.kind)


COMMANDS = {
    "simulate": _cmd_simulate,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "eval": _cmd_eval,
    "plot": _cmd_plot,
}


def main(argv: list[str] | None = None) -> None:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )

    command = COMMANDS.get(args.command)
    if command is None:
        parser.error("Unsupported command")

    try:
        paths = command(args)
    except ConfigError as exc:
        print(f"Config error: {exc}", file=sys.stderr)
        raise SystemExit(1) from None
    except TrialCVError as exc:
        print(f"Data error: {exc}", file=sys.stderr)
        raise SystemExit(2) from None

    for path in paths:
        print(str(path))
    raise SystemExit(0)
