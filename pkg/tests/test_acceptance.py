"""Monte Carlo reproductions of the simulation study.

These take minutes; set TRIALCV_ACCEPTANCE=1 to run them.
"""

from __future__ import annotations

import os
from dataclasses import replace
from typing import Any

import pytest

from trialcv import (
    ExperimentConfig,
    OutcomeKind,
    ResultTable,
    SimConfig,
    run_replicated_sim,
    run_sweep,
    summarize,
)
from trialcv.results import SummaryRow, render_csv

pytestmark = [
    pytest.mark.acceptance,
    pytest.mark.skipif(
        os.getenv("TRIALCV_ACCEPTANCE") != "1",
        reason="Set TRIALCV_ACCEPTANCE=1 to run Monte Carlo acceptance runs",
    ),
]

BASELINE = SimConfig(seed=11)


def _config(sim: SimConfig, replicates: int = 30, **changes: Any) -> ExperimentConfig:
    config = ExperimentConfig(
        mode="sim",
        sim=sim,
        replicates=replicates,
        master_seed=2024,
        jobs=os.cpu_count() or 1,
    )
    return replace(config, **changes)


def _summary(table: ResultTable, metric: str) -> dict[str, SummaryRow]:
    return {row.scheme: row for row in summarize(table) if row.metric == metric}


def _truth_values(table: ResultTable, metric: str) -> list[float]:
    return [
        r.value
        for r in table.aggregates()
        if r.scheme == "truth" and r.metric == metric and r.value is not None
    ]


@pytest.mark.anyio
async def test_kfold_overestimates_continuous_truth() -> None:
    table = await run_replicated_sim(_config(BASELINE))
    summary = _summary(table, "gen_r2")
    kfold, loso = summary["kfold"], summary["loso"]
    assert kfold.mean_estimate > kfold.mean_truth
    assert loso.mean_abs_error < kfold.mean_abs_error
    assert loso.wins >= 20


@pytest.mark.anyio
async def test_kfold_overestimates_binary_truth() -> None:
    sim = replace(BASELINE, outcome_kind=OutcomeKind.BINARY)
    table = await run_replicated_sim(_config(sim))
    delta = _summary(table, "delta_orr")
    assert delta["kfold"].mean_estimate > delta["kfold"].mean_truth
    assert delta["loso"].wins >= 20
    for metric in ("auc", "accuracy"):
        assert _summary(table, metric)["loso"].wins >= 18


@pytest.mark.anyio
async def test_latent_feature_reaches_analytic_ceiling() -> None:
    sim = replace(BASELINE, expose_latent=True)
    table = await run_replicated_sim(_config(sim, replicates=20, schemes=("loso",)))
    values = _truth_values(table, "gen_r2")
    assert len(values) == 20
    assert sum(values) / len(values) == pytest.approx(0.5, abs=0.05)


@pytest.mark.anyio
async def test_null_signal_truth() -> None:
    continuous = await run_replicated_sim(
        _config(replace(BASELINE, beta=0.0), replicates=20, schemes=("loso",))
    )
    r2 = _truth_values(continuous, "gen_r2")
    assert sum(r2) / len(r2) <= 0.05

    binary = await run_replicated_sim(
        _config(
            replace(BASELINE, beta=0.0, outcome_kind=OutcomeKind.BINARY),
            replicates=20,
            metrics=("auc",),
        )
    )
    for scheme in ("kfold", "loso", "truth"):
        aucs = [
            r.value
            for r in binary.aggregates()
            if r.scheme == scheme and r.value is not None
        ]
        assert sum(aucs) / len(aucs) == pytest.approx(0.5, abs=0.05)


@pytest.mark.anyio
async def test_runs_are_reproducible_across_jobs() -> None:
    sim = replace(BASELINE, n_per_trial=300)
    serial = await run_replicated_sim(_config(sim, replicates=4, jobs=1))
    parallel = await run_replicated_sim(_config(sim, replicates=4, jobs=4))
    assert render_csv(serial) == render_csv(parallel)


def _gaps(table: ResultTable, scheme: str) -> dict[float, float]:
    return {
        row.sweep_value: row.mean_gap
        for row in summarize(table)
        if row.scheme == scheme and row.sweep_value is not None
    }


@pytest.mark.anyio
async def test_kfold_gap_grows_with_correlation() -> None:
    config = _config(
        BASELINE, replicates=20, mode="sweep", sweep_axis="rho", sweep_values=(0.3, 0.6, 0.9)
    )
    table = await run_sweep(config)
    kfold, loso = _gaps(table, "kfold"), _gaps(table, "loso")
    assert kfold[0.3] < kfold[0.6] < kfold[0.9]
    for rho in (0.3, 0.6, 0.9):
        assert abs(loso[rho]) <= abs(kfold[rho])


@pytest.mark.anyio
async def test_kfold_gap_shrinks_with_more_correlates() -> None:
    config = _config(
        BASELINE, replicates=20, mode="sweep", sweep_axis="n_correlated", sweep_values=(5, 30)
    )
    kfold = _gaps(await run_sweep(config), "kfold")
    assert kfold[5] > kfold[30]
