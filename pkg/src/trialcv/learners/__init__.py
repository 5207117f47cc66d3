"""Learner interface and registry."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import ClassVar

import numpy as np

from ..errors import ColumnMismatchError, LearnerError
from ..models import FloatArray, OutcomeKind
from ..types import Family, HyperGrid, ModelSpec

Params = dict[str, float]


def check_columns(expected: Sequence[str], got: Sequence[str]) -> None:
    """Raise if ``got`` differs from ``expected`` in names or order."""
    expected = tuple(expected)
    got = tuple(got)
    if expected == got:
        return
    for pos in range(max(len(expected), len(got))):
        e = expected[pos] if pos < len(expected) else None
        g = got[pos] if pos < len(got) else None
        if e != g:
            raise ColumnMismatchError(e, g, pos)


def check_training_data(X: FloatArray, y: FloatArray) -> tuple[FloatArray, FloatArray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise LearnerError(f"features {X.shape} do not match outcome length {y.shape[0]}")
    if y.size == 0:
        raise LearnerError("empty training outcome")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise LearnerError("training data contains non-finite values")
    return X, y


def default_feature_names(p: int) -> tuple[str, ...]:
    return tuple(f"x{j}" for j in range(p))


class FittedModel(ABC):
    """A trained predictor; immutable once built."""

    family: ClassVar[Family]
    params: Params
    feature_names: tuple[str, ...]
    kind: OutcomeKind

    def predict(self, X: FloatArray, feature_names: Sequence[str]) -> FloatArray:
        """Scores for each row: probabilities for binary, values for continuous."""
        check_columns(self.feature_names, feature_names)
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise LearnerError(
                f"expected a 2-D matrix with {len(self.feature_names)} columns, "
                f"got shape {X.shape}"
            )
        return self._predict(X)

    @abstractmethod
    def _predict(self, X: FloatArray) -> FloatArray:
        """Predict on a column-checked matrix."""


def predict(model: FittedModel, X: FloatArray, feature_names: Sequence[str]) -> FloatArray:
    return model.predict(X, feature_names)


class Learner(ABC):
    """One model family: grid resolution, fitting and simplicity ordering."""

    family: ClassVar[Family]

    @abstractmethod
    def candidates(
        self, spec: ModelSpec, X: FloatArray, y: FloatArray, kind: OutcomeKind
    ) -> list[Params]:
        """Resolve a ModelSpec grid against training data."""

    @abstractmethod
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
    ) -> FittedModel:
        """Fit one grid point."""

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
        """Fit every grid point; families override this to share work."""
        return [
            self.fit(X, y, params, kind, spec=spec, feature_names=feature_names, seed=seed)
            for params in candidates
        ]

    @abstractmethod
    def simplicity(self, params: Params) -> tuple[float, ...]:
        """Sort key; smaller means sparser / simpler."""


def default_grid(family: Family | str, kind: OutcomeKind | str) -> HyperGrid:
    family = Family(family)
    kind = OutcomeKind(kind)
    if family is Family.RANDOM_FOREST and kind is OutcomeKind.CONTINUOUS:
        return HyperGrid(min_node=(5,))
    return HyperGrid()


def get_learner(family: Family | str) -> Learner:
    from .boosting import GbmLearner
    from .forest import ForestLearner
    from .lasso import LassoLearner

    registry: dict[Family, type[Learner]] = {
        Family.LASSO: LassoLearner,
        Family.RANDOM_FOREST: ForestLearner,
        Family.GBM: GbmLearner,
    }
    return registry[Family(family)]()


__all__ = [
    "FittedModel",
    "Learner",
    "Params",
    "check_columns",
    "default_grid",
    "get_learner",
    "predict",
]
