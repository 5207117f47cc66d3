"""Discrimination, calibrated-classification and R² metrics.

A patient is biomarker-positive iff ``score >= threshold``. Metrics that
cannot be computed come back as :class:`MetricValue` with a reason instead
of raising, so long sweeps keep running.
"""

from __future__ import annotations

import math
from collections.abc import Iterable

import numpy as np
import numpy.typing as npt
from scipy.stats import rankdata

from .errors import DataError
from .models import FloatArray, MetricReport, MetricValue
from .types import Criterion

ArrayLike = npt.ArrayLike


def _as_vector(values: ArrayLike) -> FloatArray:
    return np.asarray(values, dtype=np.float64).reshape(-1)


def auc(scores: ArrayLike, truths: ArrayLike) -> MetricValue:
    """Mann–Whitney AUC: P(score_pos > score_neg) + ½·P(tie)."""
    s = _as_vector(scores)
    y = _as_vector(truths)
    positive = y == 1
    n_pos = int(np.count_nonzero(positive))
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return MetricValue.missing("degenerate class")
    # Average ranks give tied pairs half credit.
    ranks = rankdata(s, method="average")
    u = float(np.sum(ranks[positive])) - n_pos * (n_pos + 1) / 2.0
    return MetricValue.of(u / (n_pos * n_neg))


def calibration_threshold(scores: ArrayLike, target_prevalence: float = 0.5) -> float:
    """Threshold marking round(target·m) of the m scores positive, ties allowing.

    At 0.5 this is the empirical median. Away from 0.5, a tied group at the
    boundary goes wholly to whichever side leaves the count nearer the target.
    """
    s = np.sort(_as_vector(scores))
    m = s.size
    if m == 0:
        raise DataError("calibration_threshold needs at least one score")
    if not 0 < target_prevalence < 1:
        raise DataError(f"target_prevalence must lie in (0, 1), got {target_prevalence}")

    doubled = 2.0 * target_prevalence * m
    k = math.floor(target_prevalence * m + 0.5)
    if k >= m:
        return float(s[0])
    if k <= 0:
        return float(np.nextafter(s[-1], np.inf))
    boundary = float(s[m - k])
    if s[m - k - 1] == boundary and target_prevalence != 0.5:
        # Tied boundary group: all of it positive, or none of it.
        with_group = int(np.count_nonzero(s >= boundary))
        without_group = int(np.count_nonzero(s > boundary))
        if abs(without_group - k) < abs(with_group - k):
            return float(np.nextafter(boundary, np.inf))
        return boundary
    if abs(doubled - round(doubled)) < 1e-9 and round(doubled) % 2 == 1:
        # Half-integer target (odd m at 0.5): the order statistic itself.
        return boundary
    return float((s[m - k - 1] + boundary) / 2.0)


def classify(scores: ArrayLike, threshold: float) -> npt.NDArray[np.bool_]:
    return _as_vector(scores) >= threshold


def delta_orr(
    scores: ArrayLike, truths: ArrayLike, threshold: float
) -> tuple[MetricValue, MetricValue, MetricValue]:
    """Response rate above vs below the threshold, and their difference."""
    y = _as_vector(truths)
    positive = classify(scores, threshold)
    n1 = int(np.count_nonzero(positive))
    n0 = y.size - n1
    orr1 = (
        MetricValue.of(float(np.sum(y[positive])) / n1)
        if n1
        else MetricValue.missing("empty biomarker group")
    )
    orr0 = (
        MetricValue.of(float(np.sum(y[~positive])) / n0)
        if n0
        else MetricValue.missing("empty biomarker group")
    )
    if orr1.value is None or orr0.value is None:
        return orr1, orr0, MetricValue.missing("empty biomarker group")
    return orr1, orr0, MetricValue.of(orr1.value - orr0.value)


def classification_accuracy(
    scores: ArrayLike, truths: ArrayLike, threshold: float
) -> MetricValue:
    y = _as_vector(truths)
    if y.size == 0:
        return MetricValue.missing("empty input")
    agree = classify(scores, threshold) == (y == 1)
    return MetricValue.of(float(np.count_nonzero(agree)) / y.size)


def generalized_r2(scores: ArrayLike, truths: ArrayLike) -> MetricValue:
    """Out-of-sample 1 − SSE/SST against the evaluation-set mean."""
    s = _as_vector(scores)
    y = _as_vector(truths)
    if y.size < 2:
        return MetricValue.missing("zero total variance")
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        return MetricValue.missing("zero total variance")
    sse = float(np.sum((y - s) ** 2))
    return MetricValue.of(1.0 - sse / sst)


def evaluate(
    scores: ArrayLike,
    truths: ArrayLike,
    metrics: Iterable[str],
    threshold: float | None = None,
) -> MetricReport:
    """Compute the requested metrics in one pass.

    ``threshold`` is required for the classification metrics.
    """
    wanted = tuple(metrics)
    out: dict[str, MetricValue] = {}
    if "auc" in wanted:
        out["auc"] = auc(scores, truths)
    if {"orr1", "orr0", "delta_orr", "accuracy"} & set(wanted):
        if threshold is None:
            raise ValueError("classification metrics need a threshold")
        orr1, orr0, delta = delta_orr(scores, truths, threshold)
        computed = {"orr1": orr1, "orr0": orr0, "delta_orr": delta}
        out.update({name: v for name, v in computed.items() if name in wanted})
        if "accuracy" in wanted:
            out["accuracy"] = classification_accuracy(scores, truths, threshold)
    if "gen_r2" in wanted:
        out["gen_r2"] = generalized_r2(scores, truths)
    return MetricReport({name: out[name] for name in wanted if name in out})


def criterion_value(criterion: Criterion, scores: ArrayLike, truths: ArrayLike) -> float | None:
    """Inner-loop tuning score; None when undefined on this fold."""
    if criterion is Criterion.AUC:
        return auc(scores, truths).value
    if criterion is Criterion.R2:
        return generalized_r2(scores, truths).value
    s = _as_vector(scores)
    y = _as_vector(truths)
    if y.size == 0:
        return None
    return float(np.mean((y - s) ** 2))
