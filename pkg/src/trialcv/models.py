"""Typed data models shared by every trialcv module."""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.intp]


class OutcomeKind(str, Enum):
    """Whether the outcome is a continuous value or a 0/1 responder flag."""

    CONTINUOUS = "continuous"
    BINARY = "binary"


# =============================================================================
# Study data
# =============================================================================


@dataclass(frozen=True, eq=False)
class TrialDataset:
    """One study: an n×p feature matrix, its outcome and identity.

    Arrays are copied to read-only float64 on construction; shape problems
    raise ``ValueError`` immediately, value problems (non-finite cells,
    non-binary outcomes) are reported by :func:`trialcv.data.validate_collection`.
    """

    study_id: str
    features: FloatArray
    feature_names: tuple[str, ...]
    outcome: FloatArray
    outcome_kind: OutcomeKind

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64, copy=True)
        outcome = np.array(self.outcome, dtype=np.float64, copy=True).reshape(-1)
        if features.ndim != 2:
            raise ValueError(f"{self.study_id}: features must be 2-D, got {features.ndim}-D")
        if features.shape[0] != outcome.shape[0]:
            raise ValueError(
                f"{self.study_id}: {features.shape[0]} feature rows but "
                f"{outcome.shape[0]} outcomes"
            )
        names = tuple(self.feature_names)
        if len(names) != features.shape[1]:
            raise ValueError(
                f"{self.study_id}: {features.shape[1]} columns but {len(names)} names"
            )
        features.setflags(write=False)
        outcome.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "outcome", outcome)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "outcome_kind", OutcomeKind(self.outcome_kind))

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def p(self) -> int:
        return int(self.features.shape[1])

    def equals(self, other: TrialDataset) -> bool:
        """Exact equality of ids, names, kind and every matrix cell."""
        return (
            self.study_id == other.study_id
            and self.feature_names == other.feature_names
            and self.outcome_kind == other.outcome_kind
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.outcome, other.outcome)
        )


@dataclass(frozen=True)
class StudyCollection:
    """Ordered set of studies sharing one feature space."""

    studies: tuple[TrialDataset, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "studies", tuple(self.studies))

    def __len__(self) -> int:
        return len(self.studies)

    def __iter__(self) -> Iterator[TrialDataset]:
        return iter(self.studies)

    @property
    def study_ids(self) -> tuple[str, ...]:
        return tuple(s.study_id for s in self.studies)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.studies[0].feature_names if self.studies else ()

    @property
    def outcome_kind(self) -> OutcomeKind:
        return self.studies[0].outcome_kind if self.studies else OutcomeKind.CONTINUOUS

    @property
    def n_total(self) -> int:
        return sum(s.n for s in self.studies)

    def get(self, study_id: str) -> TrialDataset:
        for study in self.studies:
            if study.study_id == study_id:
                return study
        raise KeyError(study_id)

    def without(self, study_id: str) -> StudyCollection:
        return StudyCollection(tuple(s for s in self.studies if s.study_id != study_id))


@dataclass(frozen=True)
class Violation:
    """One reason a collection is invalid."""

    study_id: str
    reason: str

    def __str__(self) -> str:
        return f"{self.study_id}: {self.reason}"


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class PooledData:
    """Row-stacked studies with the originating study of every row."""

    features: FloatArray
    outcome: FloatArray
    labels: tuple[str, ...]
    sample_index: IntArray
    feature_names: tuple[str, ...]
    outcome_kind: OutcomeKind

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    def take(self, rows: IntArray) -> PooledData:
        return PooledData(
            features=self.features[rows],
            outcome=self.outcome[rows],
            labels=tuple(self.labels[i] for i in rows),
            sample_index=self.sample_index[rows],
            feature_names=self.feature_names,
            outcome_kind=self.outcome_kind,
        )


# =============================================================================
# Folds and predictions
# =============================================================================


@dataclass(frozen=True)
class PredictionRecord:
    """One held-out prediction."""

    study_id: str
    sample_index: int
    score: float
    truth: float
    fold_id: int


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Assignment of every pooled row to one of ``n_folds`` folds.

    ``folds`` is aligned with the pooled row order of the collection the
    plan was built for; ``labels`` and ``sample_index`` identify each row.
    """

    n_folds: int
    folds: IntArray
    labels: tuple[str, ...]
    sample_index: IntArray

    def __post_init__(self) -> None:
        folds = np.asarray(self.folds, dtype=np.intp).copy()
        folds.setflags(write=False)
        object.__setattr__(self, "folds", folds)

    @property
    def assignment(self) -> dict[tuple[str, int], int]:
        return {
            (label, int(idx)): int(fold)
            for label, idx, fold in zip(self.labels, self.sample_index, self.folds)
        }

    def rows(self, fold_id: int) -> IntArray:
        return np.flatnonzero(self.folds == fold_id)

    def rows_excluding(self, fold_id: int) -> IntArray:
        return np.flatnonzero(self.folds != fold_id)

    def sizes(self) -> list[int]:
        return [int(np.count_nonzero(self.folds == f)) for f in range(self.n_folds)]


# =============================================================================
# Metrics
# =============================================================================


@dataclass(frozen=True)
class MetricValue:
    """A metric value, or the reason it could not be computed."""

    value: float | None = None
    missing_reason: str | None = None

    def __post_init__(self) -> None:
        if (self.value is None) == (self.missing_reason is None):
            raise ValueError("exactly one of value / missing_reason must be set")

    @classmethod
    def of(cls, value: float) -> MetricValue:
        return cls(value=float(value))

    @classmethod
    def missing(cls, reason: str) -> MetricValue:
        return cls(missing_reason=reason)

    @property
    def is_missing(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class MetricReport:
    """Metric name → value-or-missing."""

    values: Mapping[str, MetricValue] = field(default_factory=dict)

    def __getitem__(self, name: str) -> MetricValue:
        return self.values[name]

    def __contains__(self, name: object) -> bool:
        return name in self.values

    def names(self) -> tuple[str, ...]:
        return tuple(self.values)

    def value(self, name: str) -> float:
        """Return the numeric value, raising ``KeyError`` if missing."""
        metric = self.values[name]
        if metric.value is None:
            raise KeyError(f"{name} is missing: {metric.missing_reason}")
        return metric.value

    @classmethod
    def mean(cls, reports: Sequence[MetricReport]) -> MetricReport:
        """Unweighted mean per metric; missing if any report is missing it."""
        if not reports:
            return cls({})
        out: dict[str, MetricValue] = {}
        for name in reports[0].names():
            vals: list[float] = []
            for fold_id, report in enumerate(reports):
                metric = report.values.get(name)
                if metric is None or metric.value is None:
                    reason = metric.missing_reason if metric else "not computed"
                    out[name] = MetricValue.missing(f"fold {fold_id}: {reason}")
                    break
                vals.append(metric.value)
            else:
                out[name] = MetricValue.of(math.fsum(vals) / len(vals))
        return cls(out)
