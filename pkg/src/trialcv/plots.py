"""Standalone SVG box plots and line charts of CV estimates against truth.

Output is built from formatted strings only, so identical tables give
identical bytes. Each model gets its own panel, left to right.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .errors import DataError
from .results import SCHEME_ORDER, ResultRow, ResultTable, format_sweep, write_text
from .types import TRUTH

logger = logging.getLogger("trialcv.plots")

PANEL_WIDTH = 280
PANEL_HEIGHT = 320
MARGIN_LEFT = 56
MARGIN_RIGHT = 16
MARGIN_TOP = 40
MARGIN_BOTTOM = 48

COLORS = {
    "kfold": "#2ca02c",
    "loso": "#1f77b4",
    TRUTH: "#d62728",
}
FALLBACK_COLOR = "#7f7f7f"


class Svg:
    """Minimal SVG document builder."""

    def __init__(self, width: int, height: int) -> None:
        self.width = width
        self.height = height
        self._parts: list[str] = []

    def add(self, element: str) -> None:
        self._parts.append(element)

    def group_start(self, cls: str) -> None:
        self.add(f"<g class={quoteattr(cls)}>")

    def group_end(self) -> None:
        self.add("</g>")

    def rect(self, x: float, y: float, w: float, h: float, *, cls: str, fill: str, stroke: str = "#000000") -> None:
        self.add(
            f'<rect class="{cls}" x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
            f'fill="{fill}" fill-opacity="0.35" stroke="{stroke}"/>'
        )

    def line(
        self,
        x1: float,
        y1: float,
        x2: float,
        y2: float,
        *,
        cls: str,
        stroke: str = "#000000",
        dash: str | None = None,
    ) -> None:
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        self.add(
            f'<line class="{cls}" x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}"{dash_attr}/>'
        )

    def polyline(self, points: Sequence[tuple[float, float]], *, cls: str, stroke: str) -> None:
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.add(
            f'<polyline class="{cls}" points="{coords}" fill="none" stroke="{stroke}" stroke-width="2"/>'
        )

    def circle(self, x: float, y: float, r: float, *, cls: str, fill: str) -> None:
        self.add(f'<circle class="{cls}" cx="{x:.2f}" cy="{y:.2f}" r="{r:.2f}" fill="{fill}"/>')

    def text(self, x: float, y: float, content: str, *, anchor: str = "middle", size: int = 11) -> None:
        self.add(
            f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" text-anchor="{anchor}" '
            f'font-family="sans-serif">{escape(content)}</text>'
        )

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">\n'
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>\n'
        )
        return head + "\n".join(self._parts) + "\n</svg>\n"


@dataclass(frozen=True)
class BoxStats:
    """Tukey box: quartiles, whiskers at the most extreme points within 1.5 IQR."""

    q1: float
    median: float
    q3: float
    low: float
    high: float
    outliers: tuple[float, ...]

    @classmethod
    def of(cls, values: Sequence[float]) -> BoxStats:
        arr = np.sort(np.asarray(values, dtype=np.float64))
        q1, median, q3 = (float(v) for v in np.percentile(arr, [25, 50, 75]))
        iqr = q3 - q1
        inside = arr[(arr >= q1 - 1.5 * iqr) & (arr <= q3 + 1.5 * iqr)]
        outside = arr[(arr < q1 - 1.5 * iqr) | (arr > q3 + 1.5 * iqr)]
        return cls(
            q1=q1,
            median=median,
            q3=q3,
            low=float(inside.min()),
            high=float(inside.max()),
            outliers=tuple(float(v) for v in outside),
        )


class _YScale:
    def __init__(self, values: Sequence[float]) -> None:
        lo, hi = min(values), max(values)
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        pad = (hi - lo) * 0.05
        self.lo, self.hi = lo - pad, hi + pad
        self.top = MARGIN_TOP
        self.bottom = PANEL_HEIGHT - MARGIN_BOTTOM

    def __call__(self, value: float) -> float:
        frac = (value - self.lo) / (self.hi - self.lo)
        return self.bottom - frac * (self.bottom - self.top)

    def ticks(self, n: int = 5) -> list[float]:
        return [self.lo + (self.hi - self.lo) * i / (n - 1) for i in range(n)]


def _color(scheme: str) -> str:
    return COLORS.get(scheme, FALLBACK_COLOR)


def _metric_rows(table: ResultTable, metric: str) -> list[ResultRow]:
    rows = [r for r in table.aggregates(metric) if r.value is not None]
    if not rows:
        raise DataError(f"metric {metric!r} has no aggregate values in the results table")
    return rows


def _draw_axis(svg: Svg, x0: float, scale: _YScale, title: str) -> None:
    svg.line(x0, scale.top, x0, scale.bottom, cls="axis")
    for tick in scale.ticks():
        y = scale(tick)
        svg.line(x0 - 4, y, x0, y, cls="tick")
        svg.text(x0 - 6, y + 4, f"{tick:.3g}", anchor="end", size=10)
    svg.text(x0 + (PANEL_WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2, MARGIN_TOP - 16, title, size=13)


def render_boxplot(table: ResultTable, metric: str) -> str:
    rows = _metric_rows(table, metric)
    models = ResultTable(tuple(rows)).models()
    schemes = [s for s in ResultTable(tuple(rows)).schemes() if s != TRUTH]
    scale = _YScale([r.value for r in rows if r.value is not None])
    svg = Svg(PANEL_WIDTH * len(models), PANEL_HEIGHT)

    for m, model in enumerate(models):
        x0 = m * PANEL_WIDTH + MARGIN_LEFT
        inner = PANEL_WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        svg.group_start(f"panel panel-{model}")
        _draw_axis(svg, x0, scale, f"{model}: {metric}")
        slot = inner / max(len(schemes), 1)
        for s, scheme in enumerate(schemes):
            values = [r.value for r in rows if r.model == model and r.scheme == scheme and r.value is not None]
            if not values:
                logger.debug("No %s values for %s/%s; box skipped", metric, model, scheme)
                continue
            stats = BoxStats.of(values)
            cx = x0 + slot * (s + 0.5)
            half = slot * 0.3
            color = _color(scheme)
            svg.group_start(f"box box-{scheme}")
            svg.line(cx, scale(stats.low), cx, scale(stats.q1), cls="whisker")
            svg.line(cx, scale(stats.q3), cx, scale(stats.high), cls="whisker")
            svg.rect(cx - half, scale(stats.q3), 2 * half, scale(stats.q1) - scale(stats.q3), cls="iqr", fill=color)
            svg.line(cx - half, scale(stats.median), cx + half, scale(stats.median), cls="median", stroke="#000000")
            for value in stats.outliers:
                svg.circle(cx, scale(value), 2.0, cls="outlier", fill=color)
            svg.group_end()
            svg.text(cx, PANEL_HEIGHT - MARGIN_BOTTOM + 16, scheme)
        truth = [r.value for r in rows if r.model == model and r.scheme == TRUTH and r.value is not None]
        if truth:
            y = scale(math.fsum(truth) / len(truth))
            svg.line(x0, y, x0 + inner, y, cls="truth-line", stroke=_color(TRUTH), dash="6,4")
        svg.group_end()
    return svg.render()


def render_linechart(table: ResultTable, metric: str) -> str:
    rows = [r for r in _metric_rows(table, metric) if r.sweep_value is not None]
    if not rows:
        raise DataError(f"metric {metric!r} has no sweep rows to chart")
    sub = ResultTable(tuple(rows))
    models = sub.models()
    series = [s for s in SCHEME_ORDER if s in sub.schemes()]
    xs = sub.sweep_values()

    means: dict[tuple[str, str, float], float] = {}
    for model in models:
        for scheme in series:
            for x in xs:
                values = [
                    r.value
                    for r in rows
                    if r.model == model and r.scheme == scheme and r.sweep_value == x and r.value is not None
                ]
                if values:
                    means[(model, scheme, x)] = math.fsum(values) / len(values)
    scale = _YScale(list(means.values()))
    svg = Svg(PANEL_WIDTH * len(models), PANEL_HEIGHT)
    inner = PANEL_WIDTH - MARGIN_LEFT - MARGIN_RIGHT

    def x_at(m: int, x: float) -> float:
        x0 = m * PANEL_WIDTH + MARGIN_LEFT
        if len(xs) == 1:
            return x0 + inner / 2
        return x0 + inner * (x - xs[0]) / (xs[-1] - xs[0])

    for m, model in enumerate(models):
        x0 = m * PANEL_WIDTH + MARGIN_LEFT
        svg.group_start(f"panel panel-{model}")
        _draw_axis(svg, x0, scale, f"{model}: {metric}")
        svg.line(x0, scale.bottom, x0 + inner, scale.bottom, cls="axis")
        for x in xs:
            svg.text(x_at(m, x), scale.bottom + 16, format_sweep(x), size=10)
        for scheme in series:
            points = [
                (x_at(m, x), scale(means[(model, scheme, x)]))
                for x in xs
                if (model, scheme, x) in means
            ]
            if not points:
                logger.debug("No %s points for %s/%s; series skipped", metric, model, scheme)
                continue
            color = _color(scheme)
            svg.polyline(points, cls=f"series series-{scheme}", stroke=color)
            for px, py in points:
                svg.circle(px, py, 2.5, cls="point", fill=color)
        svg.group_end()
    return svg.render()


def emit_svg_boxplot(table: ResultTable, metric: str, path: str | Path) -> Path:
    """One box per (scheme, model) over replicates plus a mean-truth reference line."""
    target = write_text(path, render_boxplot(table, metric))
    logger.debug("Wrote %s boxplot to %s", metric, target)
    return target


def emit_svg_linechart(table: ResultTable, metric: str, path: str | Path) -> Path:
    """One series per scheme plus the truth series over sweep values."""
    target = write_text(path, render_linechart(table, metric))
    logger.debug("Wrote %s line chart to %s", metric, target)
    return target
