"""Collection validation, pooling and the multi-study CSV format."""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from .errors import CollectionError, DataError, DataParseError
from .models import (
    OutcomeKind,
    PooledData,
    StudyCollection,
    TrialDataset,
    ValidationResult,
    Violation,
)

logger = logging.getLogger("trialcv.data")

HEADER_PREFIX = ("study_id", "outcome")


def validate_collection(collection: StudyCollection) -> ValidationResult:
    """Check every StudyCollection invariant, returning violations as data."""
    violations: list[Violation] = []
    if not collection.studies:
        return ValidationResult((Violation("<collection>", "no studies"),))

    first = collection.studies[0]
    seen: set[str] = set()
    for study in collection.studies:
        sid = study.study_id
        if sid in seen:
            violations.append(Violation(sid, "duplicate study id"))
        seen.add(sid)

        if study.n < 1:
            violations.append(Violation(sid, "no samples"))
        if study.p < 1:
            violations.append(Violation(sid, "no features"))
        if len(set(study.feature_names)) != len(study.feature_names):
            violations.append(Violation(sid, "duplicate feature names"))
        if study.feature_names != first.feature_names:
            violations.append(Violation(sid, "feature mismatch"))
        if study.outcome_kind != first.outcome_kind:
            violations.append(Violation(sid, "outcome kind mismatch"))
        if not np.isfinite(study.features).all():
            violations.append(Violation(sid, "non-finite feature value"))
        if not np.isfinite(study.outcome).all():
            violations.append(Violation(sid, "non-finite outcome"))
        elif study.outcome_kind is OutcomeKind.BINARY and not np.isin(
            study.outcome, (0.0, 1.0)
        ).all():
            violations.append(Violation(sid, "non-binary outcome"))

    return ValidationResult(tuple(violations))


def require_valid(collection: StudyCollection) -> None:
    result = validate_collection(collection)
    if not result.ok:
        raise CollectionError(result.violations)


def pool_with_labels(collection: StudyCollection) -> PooledData:
    """Stack studies in order; ``labels[i]`` is the study of row ``i``."""
    require_valid(collection)
    studies = collection.studies
    labels: list[str] = []
    for study in studies:
        labels.extend([study.study_id] * study.n)
    return PooledData(
        features=np.vstack([s.features for s in studies]),
        outcome=np.concatenate([s.outcome for s in studies]),
        labels=tuple(labels),
        sample_index=np.concatenate([np.arange(s.n, dtype=np.intp) for s in studies]),
        feature_names=collection.feature_names,
        outcome_kind=collection.outcome_kind,
    )


def regroup(pooled: PooledData) -> StudyCollection:
    """Inverse of :func:`pool_with_labels`: rebuild studies from row labels."""
    order: list[str] = []
    rows: dict[str, list[int]] = {}
    for i, label in enumerate(pooled.labels):
        if label not in rows:
            order.append(label)
            rows[label] = []
        rows[label].append(i)
    studies = []
    for label in order:
        idx = np.asarray(rows[label], dtype=np.intp)
        idx = idx[np.argsort(pooled.sample_index[idx], kind="stable")]
        studies.append(
            TrialDataset(
                study_id=label,
                features=pooled.features[idx],
                feature_names=pooled.feature_names,
                outcome=pooled.outcome[idx],
                outcome_kind=pooled.outcome_kind,
            )
        )
    return StudyCollection(tuple(studies))


def infer_outcome_kind(values: Iterable[float]) -> OutcomeKind:
    vals = list(values)
    if vals and all(v in (0.0, 1.0) for v in vals):
        return OutcomeKind.BINARY
    return OutcomeKind.CONTINUOUS


def load_study_csv(
    path: str | Path, outcome_kind: OutcomeKind | str | None = None
) -> StudyCollection:
    """Parse a ``study_id,outcome,<feature...>`` file into a StudyCollection.

    Rows are grouped by study id in order of first appearance. The outcome
    kind is inferred (binary iff every outcome is 0 or 1) unless given.
    """
    file_path = Path(path)
    name = str(file_path)
    try:
        text = file_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"Cannot read {name}: {exc}") from exc

    # csv handles both LF and CRLF when given the raw text lines.
    reader = csv.reader(text.splitlines())
    header: list[str] | None = None
    order: list[str] = []
    outcomes: dict[str, list[float]] = {}
    features: dict[str, list[list[float]]] = {}

    for line_no, row in enumerate(reader, start=1):
        if header is None:
            header = [cell.strip() for cell in row]
            _check_header(name, header)
            continue
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise DataParseError(
                name, line_no, f"expected {len(header)} cells, found {len(row)}"
            )
        study_id = row[0].strip()
        if not study_id:
            raise DataParseError(name, line_no, "missing cell in column 'study_id'")
        values = [
            _parse_number(name, line_no, header[col], row[col])
            for col in range(1, len(row))
        ]
        if study_id not in outcomes:
            order.append(study_id)
            outcomes[study_id] = []
            features[study_id] = []
        outcomes[study_id].append(values[0])
        features[study_id].append(values[1:])

    if header is None:
        raise DataParseError(name, 1, "empty file, expected header")
    if not order:
        raise DataParseError(name, 2, "no data rows")

    if outcome_kind is None:
        kind = infer_outcome_kind(v for sid in order for v in outcomes[sid])
    else:
        kind = OutcomeKind(outcome_kind)

    feature_names = tuple(header[2:])
    collection = StudyCollection(
        tuple(
            TrialDataset(
                study_id=sid,
                features=np.asarray(features[sid], dtype=np.float64).reshape(
                    -1, len(feature_names)
                ),
                feature_names=feature_names,
                outcome=np.asarray(outcomes[sid], dtype=np.float64),
                outcome_kind=kind,
            )
            for sid in order
        )
    )
    require_valid(collection)
    logger.debug(
        "Loaded %d studies, %d rows, %d features from %s",
        len(collection),
        collection.n_total,
        len(feature_names),
        name,
    )
    return collection


def _check_header(name: str, header: list[str]) -> None:
    if len(header) < 3 or tuple(header[:2]) != HEADER_PREFIX:
        raise DataParseError(
            name, 1, "header must be 'study_id,outcome,<feature>,...' with >= 1 feature"
        )
    feature_names = header[2:]
    if any(not f for f in feature_names):
        raise DataParseError(name, 1, "empty feature name in header")
    if len(set(feature_names)) != len(feature_names):
        raise DataParseError(name, 1, "duplicate feature names in header")


def _parse_number(name: str, line_no: int, column: str, cell: str) -> float:
    cell = cell.strip()
    if not cell:
        raise DataParseError(name, line_no, f"missing cell in column {column!r}")
    try:
        value = float(cell)
    except ValueError:
        raise DataParseError(
            name, line_no, f"non-numeric cell {cell!r} in column {column!r}"
        ) from None
    if not math.isfinite(value):
        raise DataParseError(name, line_no, f"non-finite cell {cell!r} in column {column!r}")
    return value


def write_study_csv(studies: Iterable[TrialDataset], path: str | Path) -> Path:
    """Write studies in the loader's format; reloading reproduces them exactly."""
    studies = list(studies)
    if not studies:
        raise DataError("Nothing to write: no studies")
    names = studies[0].feature_names
    for study in studies:
        if study.feature_names != names:
            raise DataError(f"{study.study_id}: feature names differ from first study")
        if "," in study.study_id or "\n" in study.study_id:
            raise DataError(f"study id {study.study_id!r} cannot be written unquoted")

    out = Path(path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join((*HEADER_PREFIX, *names)) + "\n")
            for study in studies:
                for i in range(study.n):
                    cells = [study.study_id, repr(float(study.outcome[i]))]
                    cells.extend(repr(float(v)) for v in study.features[i])
                    fh.write(",".join(cells) + "\n")
    except OSError as exc:
        raise DataError(f"Cannot write {out}: {exc}") from exc
    return out
