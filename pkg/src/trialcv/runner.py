"""Replicated simulation, sweep and external-data experiments.

Replicates are independent: each derives its seed from the master seed and
its index only, and runs in a worker thread. Rows are sorted before they
are returned, so the table does not depend on ``jobs``.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import replace

import anyio
import anyio.to_thread

from .cv import evaluate_truth, run_cv
from .data import load_study_csv
from .errors import ConfigError, DataError, ExperimentError, UnknownStudyError
from .models import OutcomeKind, StudyCollection, TrialDataset
from .results import ResultRow, ResultTable, cv_rows, truth_rows
from .seeds import derive_seed
from .simulate import simulate_collection
from .types import TRUTH, CvScheme, ExperimentConfig, SimConfig

logger = logging.getLogger("trialcv.runner")

Task = Callable[[], list[ResultRow]]


def replicate_seed(master_seed: int, replicate: int) -> int:
    return derive_seed(master_seed, "replicate", replicate)


def scheme_for(name: str, config: ExperimentConfig, seed: int) -> CvScheme:
    if name == "kfold":
        return CvScheme.kfold(config.k_folds, derive_seed(seed, "kfold"))
    if name == "loso":
        return CvScheme.loso()
    raise ConfigError(f"Unknown CV scheme: {name!r}")


def evaluate_collection(
    config: ExperimentConfig,
    collection: StudyCollection,
    future: TrialDataset,
    *,
    replicate: int,
    sweep_value: float | None,
    seed: int,
) -> list[ResultRow]:
    """Every requested scheme and model on one legacy collection, plus truth rows."""
    kind = collection.outcome_kind
    metrics = config.resolved_metrics(kind)
    rows: list[ResultRow] = []
    for family in config.models:
        spec = config.model_spec(family, kind)
        for name in config.schemes:
            try:
                result = run_cv(
                    collection,
                    scheme_for(name, config, seed),
                    spec,
                    metrics,
                    future.features,
                    seed,
                    calibration=config.calibration,
                )
            except Exception as exc:
                raise ExperimentError(replicate, name, family.value, exc) from exc
            rows.extend(cv_rows(result, replicate, sweep_value))
        try:
            truth = evaluate_truth(
                collection, future, spec, metrics, seed, calibration=config.calibration
            )
        except Exception as exc:
            raise ExperimentError(replicate, TRUTH, family.value, exc) from exc
        rows.extend(truth_rows(truth, family, replicate, sweep_value))

    for row in rows:
        if row.is_aggregate and row.missing_reason is not None:
            logger.info(
                "Replicate %d %s/%s %s missing: %s",
                replicate,
                row.scheme,
                row.model,
                row.metric,
                row.missing_reason,
            )
    return rows


def run_replicate(
    config: ExperimentConfig,
    replicate: int,
    sim: SimConfig | None = None,
    sweep_value: float | None = None,
) -> list[ResultRow]:
    """Simulate replicate ``replicate`` afresh and evaluate it."""
    seed = replicate_seed(config.master_seed, replicate)
    sim = replace(sim or config.sim, seed=seed)
    logger.debug("Replicate %d (sweep value %s) starting", replicate, sweep_value)
    collection, future, _ = simulate_collection(sim)
    rows = evaluate_collection(
        config,
        collection,
        future,
        replicate=replicate,
        sweep_value=sweep_value,
        seed=seed,
    )
    logger.debug("Replicate %d (sweep value %s) done", replicate, sweep_value)
    return rows


async def _run_tasks(tasks: Sequence[Task], jobs: int) -> list[ResultRow]:
    """Run ``tasks`` in worker threads, at most ``jobs`` at a time.

    On failure the remaining tasks are cancelled and the error of the
    lowest-indexed failing task is raised.
    """
    limiter = anyio.CapacityLimiter(jobs)
    results: dict[int, list[ResultRow]] = {}
    errors: dict[int, Exception] = {}

    async with anyio.create_task_group() as tg:

        async def worker(index: int, task: Task) -> None:
            try:
                results[index] = await anyio.to_thread.run_sync(task, limiter=limiter)
            except Exception as exc:
                errors[index] = exc
                tg.cancel_scope.cancel()

        for index, task in enumerate(tasks):
            tg.start_soon(worker, index, task)

    if errors:
        raise errors[min(errors)]
    rows: list[ResultRow] = []
    for index in range(len(tasks)):
        rows.extend(results[index])
    return rows


def _replicate_tasks(
    config: ExperimentConfig, sim: SimConfig, sweep_value: float | None
) -> list[Task]:
    def make(r: int) -> Task:
        return lambda: run_replicate(config, r, sim, sweep_value)

    return [make(r) for r in range(config.replicates)]


async def run_replicated_sim(config: ExperimentConfig) -> ResultTable:
    if config.mode != "sim":
        raise ConfigError(f"run_replicated_sim needs mode 'sim', got {config.mode!r}")
    config.validate()
    rows = await _run_tasks(_replicate_tasks(config, config.sim, None), config.jobs)
    return ResultTable(tuple(rows), config.profile).sorted()


async def run_sweep(config: ExperimentConfig) -> ResultTable:
    """run_replicated_sim at every sweep value; replicate seeds are shared across values."""
    if config.mode != "sweep":
        raise ConfigError(f"run_sweep needs mode 'sweep', got {config.mode!r}")
    config.validate()
    tasks: list[Task] = []
    for value in config.resolved_sweep_values():
        tasks.extend(_replicate_tasks(config, config.sim_at(value), float(value)))
    rows = await _run_tasks(tasks, config.jobs)
    return ResultTable(tuple(rows), config.profile).sorted()


def split_future(collection: StudyCollection, future_id: str) -> tuple[StudyCollection, TrialDataset]:
    if future_id not in collection.study_ids:
        raise UnknownStudyError(future_id, collection.study_ids)
    if len(collection) < 3:
        raise DataError(
            f"external evaluation needs at least 3 studies (2 legacy + 1 future), "
            f"got {len(collection)}"
        )
    return collection.without(future_id), collection.get(future_id)


async def run_external(
    config: ExperimentConfig, *, outcome_kind: OutcomeKind | str | None = None
) -> ResultTable:
    """Evaluate user studies with one designated as the future trial (replicate 0)."""
    if config.mode != "external":
        raise ConfigError(f"run_external needs mode 'external', got {config.mode!r}")
    if not config.external_path or not config.future:
        raise ConfigError("external mode requires external_path and a future study id")
    collection = await anyio.to_thread.run_sync(load_study_csv, config.external_path, outcome_kind)
    config.validate(collection.outcome_kind)
    legacy, future = split_future(collection, config.future)
    logger.debug(
        "External evaluation: %d legacy studies, future %r (n=%d)",
        len(legacy),
        future.study_id,
        future.n,
    )

    def task() -> list[ResultRow]:
        return evaluate_collection(
            config,
            legacy,
            future,
            replicate=0,
            sweep_value=None,
            seed=replicate_seed(config.master_seed, 0),
        )

    rows = await _run_tasks([task], 1)
    return ResultTable(tuple(rows), config.profile).sorted()


async def run_experiment(config: ExperimentConfig) -> ResultTable:
    if config.mode == "sim":
        return await run_replicated_sim(config)
    if config.mode == "sweep":
        return await run_sweep(config)
    return await run_external(config)
