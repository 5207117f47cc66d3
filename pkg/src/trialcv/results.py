"""Result tables: rows, deterministic ordering, CSV emission and summaries."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .cv import CvResult, TruthResult
from .errors import DataParseError, TrialCVError
from .models import MetricReport
from .types import METRIC_NAMES, SCHEME_NAMES, TRUTH, Family

logger = logging.getLogger("trialcv.results")

CSV_HEADER = (
    "replicate",
    "sweep_value",
    "scheme",
    "model",
    "metric",
    "fold_id",
    "value",
    "missing_reason",
)
SUMMARY_HEADER = (
    "sweep_value",
    "model",
    "metric",
    "scheme",
    "mean_estimate",
    "mean_truth",
    "mean_gap",
    "mean_abs_error",
    "n_replicates",
    "wins",
)
SCHEME_ORDER: tuple[str, ...] = (*SCHEME_NAMES, TRUTH)
MODEL_ORDER: tuple[str, ...] = tuple(f.value for f in Family)


def _rank(order: Sequence[str], name: str) -> tuple[int, str]:
    if name in order:
        return order.index(name), ""
    return len(order), name


def format_value(value: float) -> str:
    return f"{value:.6f}"


def format_sweep(value: float | None) -> str:
    if value is None:
        return ""
    return format(value, ".12g")


@dataclass(frozen=True)
class ResultRow:
    """One line of the results table; ``fold_id=None`` marks an aggregate."""

    replicate: int
    sweep_value: float | None
    scheme: str
    model: str
    metric: str
    fold_id: int | None
    value: float | None
    missing_reason: str | None = None

    def __post_init__(self) -> None:
        if (self.value is None) == (self.missing_reason is None):
            raise ValueError("exactly one of value / missing_reason must be set")

    @property
    def is_aggregate(self) -> bool:
        return self.fold_id is None

    def sort_key(self) -> tuple[object, ...]:
        return (
            self.sweep_value is not None,
            self.sweep_value if self.sweep_value is not None else 0.0,
            self.replicate,
            _rank(SCHEME_ORDER, self.scheme),
            _rank(MODEL_ORDER, self.model),
            _rank(METRIC_NAMES, self.metric),
            self.fold_id is None,
            self.fold_id if self.fold_id is not None else 0,
        )

    def cells(self) -> list[str]:
        return [
            str(self.replicate),
            format_sweep(self.sweep_value),
            self.scheme,
            self.model,
            self.metric,
            "" if self.fold_id is None else str(self.fold_id),
            "" if self.value is None else format_value(self.value),
            self.missing_reason or "",
        ]


def _report_rows(
    report: MetricReport,
    *,
    replicate: int,
    sweep_value: float | None,
    scheme: str,
    model: str,
    fold_id: int | None,
) -> list[ResultRow]:
    return [
        ResultRow(
            replicate=replicate,
            sweep_value=sweep_value,
            scheme=scheme,
            model=model,
            metric=name,
            fold_id=fold_id,
            value=metric.value,
            missing_reason=metric.missing_reason,
        )
        for name, metric in report.values.items()
    ]


def cv_rows(
    result: CvResult, replicate: int, sweep_value: float | None = None
) -> list[ResultRow]:
    """Per-fold rows followed by the aggregate rows of one CV run."""
    reports: list[tuple[MetricReport, int | None]] = [
        (fold.report, fold.fold_id) for fold in result.folds
    ]
    reports.append((result.aggregate, None))
    rows: list[ResultRow] = []
    for report, fold_id in reports:
        rows.extend(
            _report_rows(
                report,
                replicate=replicate,
                sweep_value=sweep_value,
                scheme=result.scheme.name,
                model=result.family.value,
                fold_id=fold_id,
            )
        )
    return rows


def truth_rows(
    result: TruthResult, family: Family, replicate: int, sweep_value: float | None = None
) -> list[ResultRow]:
    return _report_rows(
        result.report,
        replicate=replicate,
        sweep_value=sweep_value,
        scheme=TRUTH,
        model=family.value,
        fold_id=None,
    )


@dataclass(frozen=True)
class ResultTable:
    """Ordered collection of result rows.

    ``profile`` is recorded as a ``# profile=<name>`` comment when not "full".
    """

    rows: tuple[ResultRow, ...] = ()
    profile: str = "full"

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[ResultRow]:
        return iter(self.rows)

    def sorted(self) -> ResultTable:
        return ResultTable(tuple(sorted(self.rows, key=ResultRow.sort_key)), self.profile)

    def concat(self, other: Iterable[ResultRow]) -> ResultTable:
        return ResultTable((*self.rows, *other), self.profile)

    def aggregates(self, metric: str | None = None) -> list[ResultRow]:
        return [
            r for r in self.rows if r.is_aggregate and (metric is None or r.metric == metric)
        ]

    def metrics(self) -> tuple[str, ...]:
        return _ordered({r.metric for r in self.rows}, METRIC_NAMES)

    def models(self) -> tuple[str, ...]:
        return _ordered({r.model for r in self.rows}, MODEL_ORDER)

    def schemes(self) -> tuple[str, ...]:
        return _ordered({r.scheme for r in self.rows}, SCHEME_ORDER)

    def sweep_values(self) -> tuple[float, ...]:
        return tuple(sorted({r.sweep_value for r in self.rows if r.sweep_value is not None}))


def _ordered(names: set[str], order: Sequence[str]) -> tuple[str, ...]:
    return tuple(sorted(names, key=lambda n: _rank(order, n)))


# =============================================================================
# CSV
# =============================================================================


def write_text(path: str | Path, text: str) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise TrialCVError(f"Cannot write {target}: {exc}") from exc
    return target


def render_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    if table.profile != "full":
        buf.write(f"# profile={table.profile}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in table.sorted():
        writer.writerow(row.cells())
    return buf.getvalue()


def emit_csv(table: ResultTable, path: str | Path) -> Path:
    """Write the table with fixed 6-decimal values and LF line endings."""
    target = write_text(path, render_csv(table))
    logger.debug("Wrote %d result rows to %s", len(table), target)
    return target


def read_results_csv(path: str | Path) -> ResultTable:
    """Parse a table written by :func:`emit_csv`; ``#`` lines are comments."""
    name = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataParseError(name, 0, f"cannot read file: {exc}") from exc

    profile = "full"
    rows: list[ResultRow] = []
    header_seen = False
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "profile" and value.strip():
                profile = value.strip()
            continue
        cells = next(csv.reader([line]))
        if not header_seen:
            if tuple(cells) != CSV_HEADER:
                raise DataParseError(name, line_no, "unexpected results header")
            header_seen = True
            continue
        rows.append(_parse_row(name, line_no, cells))
    if not header_seen:
        raise DataParseError(name, 1, "missing results header")
    return ResultTable(tuple(rows), profile)


def _parse_row(name: str, line_no: int, cells: list[str]) -> ResultRow:
    if len(cells) != len(CSV_HEADER):
        raise DataParseError(
            name, line_no, f"expected {len(CSV_HEADER)} cells, got {len(cells)}"
        )
    replicate, sweep, scheme, model, metric, fold, value, reason = cells
    try:
        return ResultRow(
            replicate=int(replicate),
            sweep_value=float(sweep) if sweep else None,
            scheme=scheme,
            model=model,
            metric=metric,
            fold_id=int(fold) if fold else None,
            value=float(value) if value else None,
            missing_reason=reason or None,
        )
    except ValueError as exc:
        raise DataParseError(name, line_no, str(exc)) from exc


# =============================================================================
# Summaries
# =============================================================================


@dataclass(frozen=True)
class SummaryRow:
    """Over-optimism of one scheme for one (sweep value, model, metric)."""

    sweep_value: float | None
    model: str
    metric: str
    scheme: str
    mean_estimate: float
    mean_truth: float
    mean_gap: float
    mean_abs_error: float
    n_replicates: int
    wins: int

    def cells(self) -> list[str]:
        return [
            format_sweep(self.sweep_value),
            self.model,
            self.metric,
            self.scheme,
            format_value(self.mean_estimate),
            format_value(self.mean_truth),
            format_value(self.mean_gap),
            format_value(self.mean_abs_error),
            str(self.n_replicates),
            str(self.wins),
        ]


@dataclass
class _Cell:
    estimates: dict[str, dict[int, float]] = field(default_factory=lambda: defaultdict(dict))
    truth: dict[int, float] = field(default_factory=dict)


def summarize(table: ResultTable) -> list[SummaryRow]:
    """Mean estimate, truth, gap and closest-estimate wins per scheme.

    Only replicates where both the estimate and the truth are present count;
    tied closest estimates credit every tied scheme.
    """
    cells: dict[tuple[float | None, str, str], _Cell] = defaultdict(_Cell)
    for row in table.aggregates():
        if row.value is None:
            continue
        cell = cells[(row.sweep_value, row.model, row.metric)]
        if row.scheme == TRUTH:
            cell.truth[row.replicate] = row.value
        else:
            cell.estimates[row.scheme][row.replicate] = row.value

    out: list[SummaryRow] = []
    for key in sorted(
        cells,
        key=lambda k: (
            k[0] is not None,
            k[0] if k[0] is not None else 0.0,
            _rank(MODEL_ORDER, k[1]),
            _rank(METRIC_NAMES, k[2]),
        ),
    ):
        cell = cells[key]
        errors: dict[str, dict[int, float]] = {
            scheme: {
                r: abs(v - cell.truth[r]) for r, v in values.items() if r in cell.truth
            }
            for scheme, values in cell.estimates.items()
        }
        best: dict[int, float] = {}
        for per_rep in errors.values():
            for r, err in per_rep.items():
                best[r] = min(best.get(r, math.inf), err)
        for scheme in _ordered(set(cell.estimates), SCHEME_ORDER):
            reps = sorted(errors[scheme])
            if not reps:
                continue
            est = [cell.estimates[scheme][r] for r in reps]
            tru = [cell.truth[r] for r in reps]
            out.append(
                SummaryRow(
                    sweep_value=key[0],
                    model=key[1],
                    metric=key[2],
                    scheme=scheme,
                    mean_estimate=math.fsum(est) / len(reps),
                    mean_truth=math.fsum(tru) / len(reps),
                    mean_gap=math.fsum(e - t for e, t in zip(est, tru)) / len(reps),
                    mean_abs_error=math.fsum(errors[scheme][r] for r in reps) / len(reps),
                    n_replicates=len(reps),
                    wins=sum(1 for r in reps if errors[scheme][r] <= best[r]),
                )
            )
    return out


def emit_summary_csv(summary: Sequence[SummaryRow], path: str | Path) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for row in summary:
        writer.writerow(row.cells())
    return write_text(path, buf.getvalue())
