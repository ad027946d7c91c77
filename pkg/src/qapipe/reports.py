"""CSV, SVG, and run-report emission.

CSV files carry full float precision (repr round-trip) so they re-parse to
bit-identical values; pretty rounding happens only on stdout. SVG charts are
hand-rolled minimal markup (axes, bars, a polyline) with no plotting
dependency; pixel aesthetics are a non-goal. The run report is a single
structured text file capturing tool version, command, configuration, seed,
and outputs; it contains nothing volatile, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

from . import __version__
from .analysis import SweepRow
from .errors import FormatError, IoError

SWEEP_HEADER = ["p_aqa_clean", "delta_abs", "delta_rel", "feasible"]
VOLUMES_HEADER = ["stage", "count"]
COSTS_HEADER = ["config", "gen", "aqa", "mqa", "total"]

RUN_REPORT_SCHEMA = 1


def _open_for_write(path: str | Path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot write ({exc.strerror or exc})", str(path)) from exc


def write_sweep_csv(path: str | Path, rows: list[SweepRow]) -> None:
    """Sweep rows at full precision; infeasible rows have empty savings."""
    with _open_for_write(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(SWEEP_HEADER)
        for row in rows:
            writer.writerow(
                [
                    repr(row.p_aqa_clean),
                    "" if row.delta_abs is None else repr(row.delta_abs),
                    "" if row.delta_rel is None else repr(row.delta_rel),
                    "true" if row.feasible else "false",
                ]
            )


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    """Inverse of :func:`write_sweep_csv`; round-trips bit-identically."""
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != SWEEP_HEADER:
                raise FormatError(f"{path}: header must be {','.join(SWEEP_HEADER)}")
            for record in reader:
                if not record:
                    continue
                p, delta_abs, delta_rel, feasible = record
                rows.append(
                    SweepRow(
                        float(p),
                        float(delta_abs) if delta_abs else None,
                        float(delta_rel) if delta_rel else None,
                        feasible == "true",
                    )
                )
    except OSError as exc:
        raise IoError(f"cannot read ({exc.strerror or exc})", str(path)) from exc
    return rows


def write_volumes_csv(path: str | Path, counts: dict[str, float]) -> None:
    with _open_for_write(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(VOLUMES_HEADER)
        for stage, count in counts.items():
            writer.writerow([stage, repr(float(count))])


def write_costs_csv(path: str | Path, rows: list[tuple[str, float, float, float, float]]) -> None:
    """One row per configuration: label, stage costs, total."""
    with _open_for_write(path) as handle:
        writer = csv.writer(handle)
        writer.writerow(COSTS_HEADER)
        for label, gen, aqa, mqa, total in rows:
            writer.writerow([label, repr(gen), repr(aqa), repr(mqa), repr(total)])


# ---------------------------------------------------------------------------
# SVG emission

_WIDTH = 640
_HEIGHT = 400
_MARGIN_LEFT = 70
_MARGIN_RIGHT = 20
_MARGIN_TOP = 40
_MARGIN_BOTTOM = 60

_PALETTE = ("#4878a8", "#e0883a", "#6aa84f", "#a85c78", "#8a8a8a", "#54a0a0")


def _nice_ticks(upper: float, count: int = 5) -> list[float]:
    if upper <= 0.0:
        return [0.0, 1.0]
    raw = upper / count
    magnitude = 10.0 ** math.floor(math.log10(raw))
    for factor in (1.0, 2.0, 5.0, 10.0):
        step = factor * magnitude
        if raw <= step:
            break
    top = step * math.ceil(upper / step)
    ticks = []
    value = 0.0
    while value <= top + step / 2:
        ticks.append(value)
        value += step
    return ticks


def _fmt(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return f"{value:g}"


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str):
        self.parts: list[str] = []
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
        self.plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def add(self, element: str) -> None:
        self.parts.append(element)

    def text(self, x: float, y: float, content: str, anchor: str = "middle", size: int = 12) -> None:
        self.add(
            f'<text x="{x:.1f}" y="{y:.1f}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}">{escape(content)}</text>'
        )

    def line(self, x1: float, y1: float, x2: float, y2: float, color: str = "#333333", width: float = 1.0) -> None:
        self.add(
            f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
            f'stroke="{color}" stroke-width="{width}"/>'
        )

    def rect(self, x: float, y: float, w: float, h: float, color: str) -> None:
        self.add(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{w:.1f}" height="{h:.1f}" fill="{color}"/>'
        )

    def frame(self) -> None:
        left, bottom = _MARGIN_LEFT, _MARGIN_TOP + self.plot_h
        self.line(left, _MARGIN_TOP, left, bottom)
        self.line(left, bottom, left + self.plot_w, bottom)
        self.text(_WIDTH / 2, 20, self.title, size=14)
        self.text(_WIDTH / 2, _HEIGHT - 8, self.xlabel)
        self.add(
            f'<text x="16" y="{_MARGIN_TOP + self.plot_h / 2:.1f}" font-family="sans-serif" '
            f'font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 16 {_MARGIN_TOP + self.plot_h / 2:.1f})">{escape(self.ylabel)}</text>'
        )

    def y_axis(self, ticks: list[float], top: float) -> None:
        left, bottom = _MARGIN_LEFT, _MARGIN_TOP + self.plot_h
        for tick in ticks:
            y = bottom - (tick / top) * self.plot_h if top else bottom
            self.line(left - 4, y, left, y)
            self.text(left - 8, y + 4, _fmt(tick), anchor="end", size=10)

    def render(self) -> str:
        body = "\n  ".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
            f'viewBox="0 0 {_WIDTH} {_HEIGHT}">\n  '
            f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>\n  '
            f"{body}\n</svg>\n"
        )


def svg_bar_chart(labels: list[str], values: list[float], title: str, ylabel: str) -> str:
    """Vertical bars with value labels; used for per-stage volumes."""
    canvas = _Canvas(title, "", ylabel)
    top = max([v for v in values if v is not None] + [0.0])
    ticks = _nice_ticks(top)
    top = ticks[-1]
    canvas.y_axis(ticks, top)
    bottom = _MARGIN_TOP + canvas.plot_h
    slot = canvas.plot_w / max(len(values), 1)
    bar_w = slot * 0.6
    for i, (label, value) in enumerate(zip(labels, values)):
        x = _MARGIN_LEFT + slot * i + (slot - bar_w) / 2
        height = (value / top) * canvas.plot_h if top else 0.0
        canvas.rect(x, bottom - height, bar_w, height, _PALETTE[0])
        canvas.text(x + bar_w / 2, bottom - height - 4, _fmt(round(value, 2)), size=10)
        canvas.text(x + bar_w / 2, bottom + 16, label, size=11)
    canvas.frame()
    return canvas.render()


def svg_stacked_bars(
    labels: list[str], series: list[tuple[str, list[float]]], title: str, ylabel: str
) -> str:
    """Stacked per-label bars with a legend; used for cost composition."""
    canvas = _Canvas(title, "", ylabel)
    totals = [sum(values[i] for _, values in series) for i in range(len(labels))]
    top = max(totals + [0.0])
    ticks = _nice_ticks(top)
    top = ticks[-1]
    canvas.y_axis(ticks, top)
    bottom = _MARGIN_TOP + canvas.plot_h
    slot = canvas.plot_w / max(len(labels), 1)
    bar_w = slot * 0.6
    for i, label in enumerate(labels):
        x = _MARGIN_LEFT + slot * i + (slot - bar_w) / 2
        y = bottom
        for s, (_, values) in enumerate(series):
            height = (values[i] / top) * canvas.plot_h if top else 0.0
            y -= height
            canvas.rect(x, y, bar_w, height, _PALETTE[s % len(_PALETTE)])
        canvas.text(x + bar_w / 2, y - 4, _fmt(round(totals[i], 2)), size=10)
        canvas.text(x + bar_w / 2, bottom + 16, label, size=11)
    for s, (name, _) in enumerate(series):
        lx = _MARGIN_LEFT + 10 + s * 110
        canvas.rect(lx, _MARGIN_TOP - 14, 10, 10, _PALETTE[s % len(_PALETTE)])
        canvas.text(lx + 14, _MARGIN_TOP - 5, name, anchor="start", size=10)
    canvas.frame()
    return canvas.render()


def svg_line_chart(
    points: list[tuple[float, float]], title: str, xlabel: str, ylabel: str
) -> str:
    """Single polyline with a zero reference line; used for sweep curves."""
    canvas = _Canvas(title, xlabel, ylabel)
    if not points:
        canvas.frame()
        return canvas.render()
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys + [0.0]), max(ys + [0.0])
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    bottom = _MARGIN_TOP + canvas.plot_h

    def sx(x: float) -> float:
        return _MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * canvas.plot_w

    def sy(y: float) -> float:
        return bottom - (y - y_lo) / (y_hi - y_lo) * canvas.plot_h

    if y_lo < 0.0 < y_hi:
        canvas.line(_MARGIN_LEFT, sy(0.0), _MARGIN_LEFT + canvas.plot_w, sy(0.0), "#bbbbbb")
        canvas.text(_MARGIN_LEFT + canvas.plot_w + 4, sy(0.0) + 4, "0", anchor="start", size=10)
    coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in points)
    canvas.add(
        f'<polyline points="{coords}" fill="none" stroke="{_PALETTE[0]}" stroke-width="2"/>'
    )
    for value in (x_lo, x_hi):
        canvas.text(sx(value), bottom + 16, f"{value:g}", size=10)
    for value in (y_lo, y_hi):
        canvas.text(_MARGIN_LEFT - 8, sy(value) + 4, f"{value:.3g}", anchor="end", size=10)
    canvas.frame()
    return canvas.render()


def write_svg(path: str | Path, markup: str) -> None:
    with _open_for_write(path) as handle:
        handle.write(markup)


# ---------------------------------------------------------------------------
# Run report

def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_run_report(
    path: str | Path,
    command: str,
    config_echo: dict[str, object],
    sections: list[tuple[str, dict[str, object]]],
) -> None:
    """Single structured text file: versions, config echo, and all outputs.

    Config keys are sorted and floats written via repr, so the same run
    always produces the same bytes.
    """
    lines = [
        "# qapipe run report",
        f"schema = {RUN_REPORT_SCHEMA}",
        f"tool_version = {__version__}",
        f"command = {command}",
        "",
        "[config]",
    ]
    for key in sorted(config_echo):
        lines.append(f"{key} = {_format_value(config_echo[key])}")
    for title, entries in sections:
        lines.append("")
        lines.append(f"[{title}]")
        for key, value in entries.items():
            lines.append(f"{key} = {_format_value(value)}")
    with _open_for_write(path) as handle:
        handle.write("\n".join(lines) + "\n")
