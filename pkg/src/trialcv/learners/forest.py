"""Random forest of bootstrap-grown CART trees.

Splits minimize the size-weighted child Gini impurity (binary) or child
sum of squares (continuous). Candidate thresholds are midpoints between
consecutive distinct values; a sample goes left iff its value is at or
below the threshold. Equal-impurity splits resolve to the lowest feature
index, then the lowest threshold.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from ..errors import LearnerError
from ..models import FloatArray, IntArray, OutcomeKind
from ..seeds import rng_for
from ..types import Family, ModelSpec
from . import (
    FittedModel,
    Learner,
    Params,
    check_training_data,
    default_feature_names,
)

logger = logging.getLogger("trialcv.learners.forest")

LEAF = -1


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat array encoding of a binary tree; ``feature == -1`` marks a leaf."""

    feature: IntArray
    threshold: FloatArray
    left: IntArray
    right: IntArray
    value: FloatArray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature == LEAF))

    def predict(self, X: FloatArray) -> FloatArray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        while True:
            feat = self.feature[node]
            internal = np.flatnonzero(feat != LEAF)
            if internal.size == 0:
                return self.value[node]
            at = node[internal]
            go_left = X[internal, feat[internal]] <= self.threshold[at]
            node[internal] = np.where(go_left, self.left[at], self.right[at])


def _best_split(
    X: FloatArray, y: FloatArray, features: IntArray, binary: bool
) -> tuple[int, float] | None:
    """Best (feature, threshold) among ``features`` (ascending), or None."""
    m = y.shape[0]
    sub = X[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = y[order]

    n_left = np.arange(1, m, dtype=np.float64)[:, None]
    n_right = m - n_left
    left_sum = np.cumsum(ys, axis=0)[:-1]
    total = float(y.sum())
    if binary:
        p_left = left_sum / n_left
        p_right = (total - left_sum) / n_right
        impurity = (
            n_left * 2.0 * p_left * (1.0 - p_left)
            + n_right * 2.0 * p_right * (1.0 - p_right)
        )
    else:
        left_sq = np.cumsum(ys * ys, axis=0)[:-1]
        total_sq = float(np.dot(y, y))
        impurity = (left_sq - left_sum**2 / n_left) + (
            (total_sq - left_sq) - (total - left_sum) ** 2 / n_right
        )

    valid = xs[1:] != xs[:-1]
    if not valid.any():
        return None
    impurity = np.where(valid, impurity, np.inf)
    # Feature-major flattening makes argmin pick the lowest feature, then threshold.
    flat = impurity.T.ravel()
    best = int(np.argmin(flat))
    col, pos = divmod(best, m - 1)
    lo, hi = xs[pos, col], xs[pos + 1, col]
    threshold = (lo + hi) / 2.0
    if threshold >= hi:
        threshold = lo
    return int(features[col]), float(threshold)


def grow_tree(
    X: FloatArray,
    y: FloatArray,
    kind: OutcomeKind,
    mtry: int,
    min_node: int,
    rng: np.random.Generator,
) -> Tree:
    """Grow one unpruned tree, sampling ``mtry`` features at every node."""
    p = X.shape[1]
    binary = kind is OutcomeKind.BINARY
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node(rows: IntArray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[rows].mean()))
        return len(feature) - 1

    stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]))]
    while stack:
        node, rows = stack.pop()
        y_node = y[rows]
        if rows.size < max(min_node, 2) or y_node.min() == y_node.max():
            continue
        features = np.sort(rng.choice(p, size=mtry, replace=False))
        split = _best_split(X[rows], y_node, features, binary)
        if split is None:
            continue
        feat, thr = split
        goes_left = X[rows, feat] <= thr
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        feature[node] = feat
        threshold[node] = thr
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        stack.append((right[node], right_rows))
        stack.append((left[node], left_rows))

    return Tree(
        feature=np.asarray(feature, dtype=np.intp),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.intp),
        right=np.asarray(right, dtype=np.intp),
        value=np.asarray(value, dtype=np.float64),
    )


@dataclass(frozen=True, eq=False)
class ForestModel(FittedModel):
    family: ClassVar[Family] = Family.RANDOM_FOREST

    params: Params
    feature_names: tuple[str, ...]
    kind: OutcomeKind
    trees: tuple[Tree, ...]
    seed: int

    def _predict(self, X: FloatArray) -> FloatArray:
        # Soft voting: mean leaf proportion (binary) or leaf mean (continuous).
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)


def fit_random_forest(
    X: FloatArray,
    y: FloatArray,
    mtry: int,
    min_node: int,
    n_trees: int = 500,
    kind: OutcomeKind = OutcomeKind.CONTINUOUS,
    seed: int = 0,
    *,
    feature_names: Sequence[str] | None = None,
) -> ForestModel:
    """Fit ``n_trees`` trees; tree ``t`` draws only from stream (seed, t)."""
    X, y = check_training_data(X, y)
    kind = OutcomeKind(kind)
    n, p = X.shape
    if not 1 <= mtry <= p:
        raise LearnerError(f"mtry must lie in [1, {p}], got {mtry}")
    if min_node < 1:
        raise LearnerError(f"min_node must be >= 1, got {min_node}")
    if n_trees < 1:
        raise LearnerError(f"n_trees must be >= 1, got {n_trees}")

    trees = []
    for t in range(n_trees):
        rng = rng_for(seed, "tree", t)
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], y[boot], kind, mtry, min_node, rng))
    logger.debug(
        "Grew %d trees (mtry=%d, min_node=%d, mean leaves=%.1f)",
        n_trees,
        mtry,
        min_node,
        float(np.mean([t.n_leaves for t in trees])),
    )
    names = tuple(feature_names) if feature_names is not None else default_feature_names(p)
    return ForestModel(
        params={"mtry": mtry, "min_node": min_node},
        feature_names=names,
        kind=kind,
        trees=tuple(trees),
        seed=seed,
    )


def default_mtry(p: int) -> tuple[int, ...]:
    values = {max(1, min(p, v)) for v in (-(-p // 10), -(-p // 3), int(np.ceil(np.sqrt(p))))}
    return tuple(sorted(values))


class ForestLearner(Learner):
    family: ClassVar[Family] = Family.RANDOM_FOREST

    def candidates(
        self, spec: ModelSpec, X: FloatArray, y: FloatArray, kind: OutcomeKind
    ) -> list[Params]:
        p = X.shape[1]
        mtry = spec.grid.mtry if spec.grid.mtry is not None else default_mtry(p)
        mtry = tuple(sorted({min(int(m), p) for m in mtry}))
        return [
            {"mtry": m, "min_node": node}
            for m in mtry
            for node in spec.grid.min_node
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
    ) -> ForestModel:
        return fit_random_forest(
            X,
            y,
            int(params["mtry"]),
            int(params["min_node"]),
            spec.forest_trees,
            kind,
            seed,
            feature_names=feature_names,
        )

    def simplicity(self, params: Params) -> tuple[float, ...]:
        return (params["mtry"], -params["min_node"])
