"""Gradient boosting with depth-1 trees (stumps).

Squared-error boosting for continuous outcomes, logistic-loss boosting on
the log-odds scale for binary outcomes. Every split must leave at least
``MIN_LEAF`` observations on each side.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy.special import expit, logit

from ..errors import DegenerateOutcomeError, LearnerError
from ..models import FloatArray, IntArray, OutcomeKind
from ..types import Family, ModelSpec
from . import (
    FittedModel,
    Learner,
    Params,
    check_training_data,
    default_feature_names,
)

logger = logging.getLogger("trialcv.learners.boosting")

MIN_LEAF = 10


@dataclass(frozen=True, eq=False)
class GbmModel(FittedModel):
    """Base score plus ``shrinkage`` times the summed stump outputs."""

    family: ClassVar[Family] = Family.GBM

    params: Params
    feature_names: tuple[str, ...]
    kind: OutcomeKind
    base: float
    shrinkage: float
    split_feature: IntArray
    split_threshold: FloatArray
    left_value: FloatArray
    right_value: FloatArray

    @property
    def n_stumps(self) -> int:
        return int(self.split_feature.shape[0])

    def raw_score(self, X: FloatArray) -> FloatArray:
        """Prediction on the additive (log-odds for binary) scale."""
        total = np.zeros(X.shape[0])
        for t in range(self.n_stumps):
            goes_left = X[:, self.split_feature[t]] <= self.split_threshold[t]
            total += np.where(goes_left, self.left_value[t], self.right_value[t])
        return self.base + self.shrinkage * total

    def _predict(self, X: FloatArray) -> FloatArray:
        raw = self.raw_score(X)
        if self.kind is OutcomeKind.BINARY:
            return np.asarray(expit(raw), dtype=np.float64)
        return raw

    def truncated(self, n_trees: int) -> GbmModel:
        """The model after the first ``n_trees`` iterations."""
        if n_trees < 0:
            raise LearnerError(f"n_trees must be >= 0, got {n_trees}")
        k = min(n_trees, self.n_stumps)
        return GbmModel(
            params={"n_trees": n_trees, "shrinkage": self.shrinkage},
            feature_names=self.feature_names,
            kind=self.kind,
            base=self.base,
            shrinkage=self.shrinkage,
            split_feature=self.split_feature[:k],
            split_threshold=self.split_threshold[:k],
            left_value=self.left_value[:k],
            right_value=self.right_value[:k],
        )


class _StumpSearch:
    """Exhaustive stump search over presorted columns.

    Columns are sorted once; each iteration only gathers the residuals in
    that order and takes cumulative sums.
    """

    def __init__(self, X: FloatArray) -> None:
        n = X.shape[0]
        self.order = np.argsort(X, axis=0, kind="stable")
        xs = np.take_along_axis(X, self.order, axis=0)
        self.n_left = np.arange(1, n, dtype=np.float64)[:, None]
        self.n_right = n - self.n_left
        sizes_ok = (self.n_left >= MIN_LEAF) & (self.n_right >= MIN_LEAF)
        self.eligible = (xs[1:] != xs[:-1]) & sizes_ok
        self.thresholds = (xs[1:] + xs[:-1]) / 2.0
        # Guard against a midpoint rounding up onto the right-hand value.
        self.thresholds = np.where(self.thresholds >= xs[1:], xs[:-1], self.thresholds)
        self.n = n

    @property
    def any_eligible(self) -> bool:
        return bool(self.eligible.any())

    def best(self, residual: FloatArray) -> tuple[int, float]:
        """Split maximizing S_L²/n_L + S_R²/n_R; ties go to the lowest feature, then threshold."""
        cs = np.cumsum(residual[self.order], axis=0)
        left = cs[:-1]
        right = cs[-1] - left
        gain = left**2 / self.n_left + right**2 / self.n_right
        gain = np.where(self.eligible, gain, -np.inf)
        best = int(np.argmax(gain.T.ravel()))
        feature, pos = divmod(best, self.n - 1)
        return feature, float(self.thresholds[pos, feature])


def fit_gbm(
    X: FloatArray,
    y: FloatArray,
    n_trees: int,
    shrinkage: float,
    kind: OutcomeKind = OutcomeKind.CONTINUOUS,
    *,
    feature_names: Sequence[str] | None = None,
) -> GbmModel:
    X, y = check_training_data(X, y)
    kind = OutcomeKind(kind)
    n, p = X.shape
    if n_trees < 0:
        raise LearnerError(f"n_trees must be >= 0, got {n_trees}")
    if not 0 < shrinkage <= 1:
        raise LearnerError(f"shrinkage must lie in (0, 1], got {shrinkage}")
    if n < 2 * MIN_LEAF:
        raise DegenerateOutcomeError(
            f"boosting needs at least {2 * MIN_LEAF} observations "
            f"({MIN_LEAF} per terminal node), got {n}"
        )
    binary = kind is OutcomeKind.BINARY
    ybar = float(y.mean())
    if binary and ybar in (0.0, 1.0):
        raise DegenerateOutcomeError("binary boosting needs both classes in the training outcome")
    base = float(logit(ybar)) if binary else ybar

    search = _StumpSearch(X)
    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[float] = []
    rights: list[float] = []
    score = np.full(n, base)
    if n_trees > 0 and not search.any_eligible:
        logger.info("No eligible stump split; boosting stops with the base score only")
    for _ in range(n_trees if search.any_eligible else 0):
        if binary:
            prob = expit(score)
            residual = y - prob
        else:
            residual = y - score
        feature, threshold = search.best(residual)
        goes_left = X[:, feature] <= threshold
        if binary:
            hess = prob * (1.0 - prob)
            left_value = _newton_step(residual[goes_left], hess[goes_left])
            right_value = _newton_step(residual[~goes_left], hess[~goes_left])
        else:
            left_value = float(residual[goes_left].mean())
            right_value = float(residual[~goes_left].mean())
        features.append(feature)
        thresholds.append(threshold)
        lefts.append(left_value)
        rights.append(right_value)
        score += shrinkage * np.where(goes_left, left_value, right_value)

    names = tuple(feature_names) if feature_names is not None else default_feature_names(p)
    return GbmModel(
        params={"n_trees": n_trees, "shrinkage": shrinkage},
        feature_names=names,
        kind=kind,
        base=base,
        shrinkage=float(shrinkage),
        split_feature=np.asarray(features, dtype=np.intp),
        split_threshold=np.asarray(thresholds, dtype=np.float64),
        left_value=np.asarray(lefts, dtype=np.float64),
        right_value=np.asarray(rights, dtype=np.float64),
    )


def _newton_step(residual: FloatArray, hess: FloatArray) -> float:
    den = float(hess.sum())
    if den <= 0.0:
        return 0.0
    return float(residual.sum()) / den


class GbmLearner(Learner):
    family: ClassVar[Family] = Family.GBM

    def candidates(
        self, spec: ModelSpec, X: FloatArray, y: FloatArray, kind: OutcomeKind
    ) -> list[Params]:
        return [
            {"n_trees": t, "shrinkage": s}
            for s in spec.grid.shrinkage
            for t in spec.grid.n_trees
        ]

    def fit(
        self,
        X: FloatArray,
        y: FloatArray,
        params: Params,
        kind: OutcomeKind,
        *,
        spec: ModelSpec,
        feature_names: Sequence[str],
        seed: int,
    ) -> GbmModel:
        return fit_gbm(
            X,
            y,
            int(params["n_trees"]),
            params["shrinkage"],
            kind,
            feature_names=feature_names,
        )

    def fit_candidates(
        self,
        X: FloatArray,
        y: FloatArray,
        candidates: Sequence[Params],
        kind: OutcomeKind,
        *,
        spec: ModelSpec,
        feature_names: Sequence[str],
        seed: int,
    ) -> list[FittedModel]:
        # One fit per shrinkage at the largest n_trees; shorter ones are prefixes.
        longest: dict[float, int] = {}
        for c in candidates:
            s = c["shrinkage"]
            longest[s] = max(longest.get(s, 0), int(c["n_trees"]))
        full = {
            s: fit_gbm(X, y, t, s, kind, feature_names=feature_names)
            for s, t in longest.items()
        }
        return [full[c["shrinkage"]].truncated(int(c["n_trees"])) for c in candidates]

    def simplicity(self, params: Params) -> tuple[float, ...]:
        return (params["n_trees"], params["shrinkage"])
