"""Fold plans, nested tuning and held-out evaluation.

Inner tuning folds are the outer plan's remaining folds, so LOSO tunes by
leave-one-remaining-study-out and K-fold by the other k-1 folds. Calibrated
thresholds come from each fold-model's own predictions on the future
trial's features; outcomes of the future trial never enter :func:`run_cv`.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .data import pool_with_labels, require_valid
from .errors import ConfigError, DataError, FoldError
from .learners import FittedModel, Params, check_columns, get_learner
from .metrics import calibration_threshold, criterion_value, evaluate
from .models import (
    FloatArray,
    FoldPlan,
    IntArray,
    MetricReport,
    OutcomeKind,
    PooledData,
    PredictionRecord,
    StudyCollection,
    TrialDataset,
)
from .seeds import derive_seed
from .types import TRUTH, CalibrationPolicy, Criterion, CvScheme, Family, ModelSpec

logger = logging.getLogger("trialcv.cv")

THRESHOLD_METRICS = frozenset({"orr1", "orr0", "delta_orr", "accuracy"})


# =============================================================================
# Results
# =============================================================================


@dataclass(frozen=True, eq=False)
class FoldResult:
    """Held-out predictions and metrics of one outer fold."""

    fold_id: int
    labels: tuple[str, ...]
    sample_index: IntArray
    scores: FloatArray
    truths: FloatArray
    report: MetricReport
    params: Params
    # Threshold used for the classification metrics, if any were requested.
    threshold: float | None = None

    @property
    def records(self) -> tuple[PredictionRecord, ...]:
        return tuple(
            PredictionRecord(
                study_id=label,
                sample_index=int(idx),
                score=float(score),
                truth=float(truth),
                fold_id=self.fold_id,
            )
            for label, idx, score, truth in zip(
                self.labels, self.sample_index, self.scores, self.truths
            )
        )


@dataclass(frozen=True, eq=False)
class CvResult:
    scheme: CvScheme
    family: Family
    plan: FoldPlan
    folds: tuple[FoldResult, ...]
    aggregate: MetricReport

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    @property
    def params(self) -> tuple[Params, ...]:
        return tuple(f.params for f in self.folds)


@dataclass(frozen=True, eq=False)
class TruthResult:
    """Performance of the all-legacy model on the future trial."""

    report: MetricReport
    params: Params
    scores: FloatArray
    threshold: float | None = None


# =============================================================================
# Fold plans
# =============================================================================


def _partition(n: int, k: int, rng: np.random.Generator) -> IntArray:
    folds = np.empty(n, dtype=np.intp)
    folds[rng.permutation(n)] = np.arange(n) % k
    return folds


def make_folds(scheme: CvScheme, collection: StudyCollection) -> FoldPlan:
    """K-fold: seeded random partition of the pooled rows; LOSO: fold i is study i."""
    require_valid(collection)
    pooled = pool_with_labels(collection)
    n = pooled.n
    if scheme.kind == "kfold":
        if not 2 <= scheme.k <= n:
            raise FoldError(f"K-fold needs 2 <= k <= n (n={n}), got k={scheme.k}")
        folds = _partition(n, scheme.k, np.random.default_rng(scheme.seed))
        return FoldPlan(scheme.k, folds, pooled.labels, pooled.sample_index)
    if scheme.kind == "loso":
        if len(collection) < 2:
            raise FoldError(
                f"leave-one-study-out needs at least 2 studies, got {len(collection)}"
            )
        index = {sid: i for i, sid in enumerate(collection.study_ids)}
        folds = np.asarray([index[label] for label in pooled.labels], dtype=np.intp)
        return FoldPlan(len(collection), folds, pooled.labels, pooled.sample_index)
    raise ConfigError(f"Unknown CV scheme: {scheme.kind!r}")


def random_plan(labels: Sequence[str], sample_index: IntArray, seed: int) -> FoldPlan:
    """Seeded 3-fold split (2-fold below 9 rows) for when no study structure is left."""
    n = len(labels)
    if n < 2:
        raise FoldError(f"cannot split {n} training rows for tuning")
    k = 3 if n >= 9 else 2
    return FoldPlan(k, _partition(n, k, np.random.default_rng(seed)), tuple(labels), sample_index)


def inner_plan(plan: FoldPlan, fold_id: int, seed: int) -> FoldPlan:
    """Tuning folds for outer fold ``fold_id``: the other outer folds, renumbered."""
    rows = plan.rows_excluding(fold_id)
    labels = tuple(plan.labels[i] for i in rows)
    remaining, folds = np.unique(plan.folds[rows], return_inverse=True)
    if remaining.size < 2:
        logger.debug("Outer fold %d leaves one training fold; tuning on a random split", fold_id)
        return random_plan(labels, plan.sample_index[rows], seed)
    return FoldPlan(int(remaining.size), folds.reshape(-1), labels, plan.sample_index[rows])


# =============================================================================
# Tuning
# =============================================================================


def default_criterion(family: Family | str, kind: OutcomeKind | str) -> Criterion:
    """AUC for binary outcomes; MSE for continuous lasso, R² for the tree families."""
    if OutcomeKind(kind) is OutcomeKind.BINARY:
        return Criterion.AUC
    return Criterion.MSE if Family(family) is Family.LASSO else Criterion.R2


def tune(
    spec: ModelSpec,
    train: PooledData,
    inner: FoldPlan,
    criterion: Criterion | str,
    kind: OutcomeKind | str,
    *,
    seed: int = 0,
) -> Params:
    """Grid point with the best mean inner-fold criterion.

    Exact ties resolve to the simplest candidate, then to the first listed.
    """
    criterion = Criterion(criterion)
    kind = OutcomeKind(kind)
    if criterion is Criterion.AUC and kind is not OutcomeKind.BINARY:
        raise ConfigError("the auc criterion requires a binary outcome")
    if inner.folds.shape[0] != train.n:
        raise FoldError(
            f"inner plan covers {inner.folds.shape[0]} rows but training set has {train.n}"
        )

    learner = get_learner(spec.family)
    X, y = train.features, train.outcome
    candidates = learner.candidates(spec, X, y, kind)
    if not candidates:
        raise ConfigError(f"{spec.family.value}: empty hyperparameter grid")
    order = sorted(range(len(candidates)), key=lambda i: learner.simplicity(candidates[i]))
    candidates = [candidates[i] for i in order]
    if len(candidates) == 1:
        return dict(candidates[0])

    scores: list[list[float]] = [[] for _ in candidates]
    for g in range(inner.n_folds):
        tr, va = inner.rows_excluding(g), inner.rows(g)
        if va.size == 0 or tr.size == 0:
            continue
        if kind is OutcomeKind.BINARY and np.unique(y[tr]).size < 2:
            logger.debug("Skipping inner fold %d: one-class training outcome", g)
            continue
        models = learner.fit_candidates(
            X[tr],
            y[tr],
            candidates,
            kind,
            spec=spec,
            feature_names=train.feature_names,
            seed=derive_seed(seed, "inner", g),
        )
        for i, model in enumerate(models):
            value = criterion_value(criterion, model.predict(X[va], train.feature_names), y[va])
            if value is not None:
                scores[i].append(value)

    best_i: int | None = None
    best_value = math.nan
    for i, values in enumerate(scores):
        if not values:
            continue
        mean = math.fsum(values) / len(values)
        better = mean > best_value if criterion.maximize else mean < best_value
        if best_i is None or better:
            best_i, best_value = i, mean
    if best_i is None:
        logger.warning(
            "%s: no inner fold produced a %s value; using the simplest candidate",
            spec.family.value,
            criterion.value,
        )
        best_i = 0
    chosen = dict(candidates[best_i])
    logger.debug("Tuned %s: %s (%s=%.6g)", spec.family.value, chosen, criterion.value, best_value)
    return chosen


# =============================================================================
# Evaluation
# =============================================================================


def _needs_threshold(metrics: Sequence[str]) -> bool:
    return bool(THRESHOLD_METRICS.intersection(metrics))


def _threshold(
    model: FittedModel,
    calibration: CalibrationPolicy,
    calibration_features: FloatArray | None,
    feature_names: Sequence[str],
) -> float:
    if not calibration.is_calibrated:
        return calibration.fixed_threshold
    if calibration_features is None:
        raise ConfigError("calibrated metrics need the future trial's features")
    cal_scores = model.predict(calibration_features, feature_names)
    return calibration_threshold(cal_scores, calibration.target_prevalence)


def run_cv(
    collection: StudyCollection,
    scheme: CvScheme,
    spec: ModelSpec,
    metrics: Sequence[str],
    calibration_features: FloatArray | None = None,
    seed: int = 0,
    *,
    calibration: CalibrationPolicy | None = None,
    criterion: Criterion | str | None = None,
) -> CvResult:
    """Nested cross-validation of one model family under one scheme."""
    calibration = calibration or CalibrationPolicy()
    metrics = tuple(metrics)
    plan = make_folds(scheme, collection)
    pooled = pool_with_labels(collection)
    kind = pooled.outcome_kind
    criterion = Criterion(criterion) if criterion is not None else default_criterion(spec.family, kind)
    needs_threshold = _needs_threshold(metrics)
    if needs_threshold and calibration.is_calibrated and calibration_features is None:
        raise ConfigError("calibrated metrics need the future trial's features")

    learner = get_learner(spec.family)
    names = pooled.feature_names
    folds: list[FoldResult] = []
    for f in range(plan.n_folds):
        tr, te = plan.rows_excluding(f), plan.rows(f)
        if kind is OutcomeKind.BINARY and np.unique(pooled.outcome[tr]).size < 2:
            raise FoldError(f"fold {f}: training outcome has a single class", fold_id=f)
        train = pooled.take(tr)
        fold_seed = derive_seed(seed, scheme.name, spec.family.value, f)
        params = tune(
            spec,
            train,
            inner_plan(plan, f, derive_seed(fold_seed, "inner-plan")),
            criterion,
            kind,
            seed=derive_seed(fold_seed, "tune"),
        )
        model = learner.fit(
            train.features,
            train.outcome,
            params,
            kind,
            spec=spec,
            feature_names=names,
            seed=fold_seed,
        )
        scores = model.predict(pooled.features[te], names)
        threshold = (
            _threshold(model, calibration, calibration_features, names)
            if needs_threshold
            else None
        )
        report = evaluate(scores, pooled.outcome[te], metrics, threshold)
        folds.append(
            FoldResult(
                fold_id=f,
                labels=tuple(pooled.labels[i] for i in te),
                sample_index=pooled.sample_index[te],
                scores=scores,
                truths=pooled.outcome[te],
                report=report,
                params=params,
                threshold=threshold,
            )
        )
        logger.debug("%s/%s fold %d: %s", scheme.name, spec.family.value, f, params)

    return CvResult(
        scheme=scheme,
        family=spec.family,
        plan=plan,
        folds=tuple(folds),
        aggregate=MetricReport.mean([fold.report for fold in folds]),
    )


def evaluate_truth(
    collection: StudyCollection,
    future: TrialDataset,
    spec: ModelSpec,
    metrics: Sequence[str],
    seed: int = 0,
    *,
    calibration: CalibrationPolicy | None = None,
    criterion: Criterion | str | None = None,
) -> TruthResult:
    """Tune and fit on every legacy study, then score the future trial."""
    calibration = calibration or CalibrationPolicy()
    metrics = tuple(metrics)
    pooled = pool_with_labels(collection)
    kind = pooled.outcome_kind
    check_columns(pooled.feature_names, future.feature_names)
    if future.outcome_kind is not kind:
        raise DataError(
            f"future study {future.study_id!r} is {future.outcome_kind.value}, "
            f"legacy studies are {kind.value}"
        )
    criterion = Criterion(criterion) if criterion is not None else default_criterion(spec.family, kind)
    if kind is OutcomeKind.BINARY and np.unique(pooled.outcome).size < 2:
        raise FoldError("legacy training outcome has a single class")

    truth_seed = derive_seed(seed, TRUTH, spec.family.value)
    if len(collection) >= 2:
        inner = make_folds(CvScheme.loso(), collection)
    else:
        inner = random_plan(pooled.labels, pooled.sample_index, derive_seed(truth_seed, "inner-plan"))
    params = tune(spec, pooled, inner, criterion, kind, seed=derive_seed(truth_seed, "tune"))
    model = get_learner(spec.family).fit(
        pooled.features,
        pooled.outcome,
        params,
        kind,
        spec=spec,
        feature_names=pooled.feature_names,
        seed=truth_seed,
    )
    scores = model.predict(future.features, future.feature_names)
    threshold: float | None = None
    if _needs_threshold(metrics):
        threshold = (
            calibration_threshold(scores, calibration.target_prevalence)
            if calibration.is_calibrated
            else calibration.fixed_threshold
        )
    report = evaluate(scores, future.outcome, metrics, threshold)
    return TruthResult(report=report, params=params, scores=scores, threshold=threshold)
