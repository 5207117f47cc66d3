"""Error types for trialcv."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass


class TrialCVError(Exception):
    """Base exception for trialcv errors."""


class ConfigError(TrialCVError):
    """Raised when a configuration object or file is invalid."""


class DataError(TrialCVError):
    """Raised when input data cannot be used."""


class DataParseError(DataError):
    """Raised when a study CSV cannot be parsed."""

    def __init__(self, path: str, line: int, reason: str):
        self.path = path
        self.line = line
        self.reason = reason
        super().__init__(f"{path}:{line}: {reason}")


class CollectionError(DataError):
    """Raised when an operation requires a valid collection and gets an invalid one."""

    def __init__(self, violations: Sequence[object]):
        self.violations = tuple(violations)
        listed = "; ".join(str(v) for v in self.violations[:5])
        more = len(self.violations) - 5
        suffix = f" (+{more} more)" if more > 0 else ""
        super().__init__(f"Invalid study collection: {listed}{suffix}")


class FoldError(DataError):
    """Raised when a fold plan cannot be built or a fold cannot be trained."""

    def __init__(self, message: str, fold_id: int | None = None):
        self.fold_id = fold_id
        super().__init__(message)


class UnknownStudyError(DataError):
    """Raised when a study id is not present in a collection."""

    def __init__(self, study_id: str, available: Sequence[str]):
        self.study_id = study_id
        self.available = tuple(available)
        super().__init__(
            f"Unknown study id {study_id!r}. Available: {', '.join(self.available)}"
        )


class LearnerError(TrialCVError):
    """Raised when a model cannot be fitted or applied."""


class DegenerateOutcomeError(LearnerError):
    """Raised when the training outcome makes the model undefined."""


class ColumnMismatchError(LearnerError):
    """Raised when prediction features do not match the training features."""

    def __init__(self, expected: str | None, got: str | None, position: int):
        self.expected = expected
        self.got = got
        self.position = position
        super().__init__(
            f"Feature mismatch at column {position}: expected {expected!r}, got {got!r}"
        )


@dataclass(eq=False)
class ExperimentError(TrialCVError):
    """Failure inside one replicate, carrying where it happened."""

    replicate: int
    scheme: str
    model: str
    cause: BaseException

    def __str__(self) -> str:  # pragma: no cover - trivial
        return (
            f"replicate {self.replicate}, scheme {self.scheme}, model {self.model}: "
            f"{type(self.cause).__name__}: {self.cause}"
        )
