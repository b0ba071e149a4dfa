"""Standalone SVG line, scatter and bar charts plus colour-grid heatmaps."""
from __future__ import annotations

from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from sb_utils.file_utils import write_text_atomic

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]

WIDTH = 960
HEIGHT = 600
MARGIN_LEFT = 90
MARGIN_RIGHT = 200
MARGIN_TOP = 70
MARGIN_BOTTOM = 90

Series = Tuple[str, Sequence[float], Sequence[float]]


def _escape(text: str) -> str:
    return (
        str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def _tick(value: float) -> str:
    if value == 0:
        return "0"
    if abs(value) >= 100:
        return f"{value:.0f}"
    if abs(value) >= 1:
        return f"{value:.1f}"
    return f"{value:.3g}"


def _header(title: str) -> List[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="36" text-anchor="middle" font-size="22" font-family="Arial">{_escape(title)}</text>',
    ]


def _frame(title: str, x_label: str, y_label: str, x_max: float, y_max: float, x_ticks: bool = True):
    """Header, grid, ticks and axis labels; returns the lines and the data->pixel maps."""
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM

    def px(x: float) -> float:
        return left + (x / x_max) * (right - left)

    def py(y: float) -> float:
        return bottom - (y / y_max) * (bottom - top)

    lines = _header(title)
    for i in range(6):
        yv = y_max * i / 5
        xv = x_max * i / 5
        lines.append(f'<line x1="{left}" y1="{py(yv):.2f}" x2="{right}" y2="{py(yv):.2f}" stroke="#d9d9d9"/>')
        lines.append(
            f'<text x="{left - 8}" y="{py(yv) + 4:.2f}" text-anchor="end" font-size="12" font-family="Arial">{_tick(yv)}</text>'
        )
        if x_ticks:
            lines.append(
                f'<text x="{px(xv):.2f}" y="{bottom + 22}" text-anchor="middle" font-size="12" font-family="Arial">{_tick(xv)}</text>'
            )
    lines.append(f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#000000" stroke-width="2"/>')
    lines.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="#000000" stroke-width="2"/>')
    lines.append(
        f'<text x="{(left + right) / 2:.1f}" y="{HEIGHT - 30}" text-anchor="middle" font-size="15" font-family="Arial">{_escape(x_label)}</text>'
    )
    mid = (top + bottom) / 2
    lines.append(
        f'<text x="26" y="{mid:.1f}" text-anchor="middle" font-size="15" font-family="Arial" transform="rotate(-90 26 {mid:.1f})">{_escape(y_label)}</text>'
    )
    return lines, px, py


def _legend(lines: List[str], idx: int, label: str, color: str, marker: str) -> None:
    right, top = WIDTH - MARGIN_RIGHT, MARGIN_TOP
    ly = top + 20 + idx * 24
    if marker == "line":
        lines.append(f'<line x1="{right + 20}" y1="{ly}" x2="{right + 44}" y2="{ly}" stroke="{color}" stroke-width="3"/>')
    else:
        lines.append(f'<circle cx="{right + 32}" cy="{ly}" r="5" fill="{color}"/>')
    lines.append(f'<text x="{right + 52}" y="{ly + 5}" font-size="13" font-family="Arial">{_escape(label)}</text>')


def _extent(series: Sequence[Series]) -> Tuple[float, float]:
    xs_all = [float(x) for _, xs, _ in series for x in xs]
    ys_all = [float(y) for _, _, ys in series for y in ys]
    if not xs_all:
        raise ValueError("nothing to plot")
    return (max(xs_all) or 1.0), (max(ys_all) or 1.0) * 1.1


def render_line_chart(title: str, x_label: str, y_label: str, series: Sequence[Series]) -> str:
    """Multi-series XY chart; axes start at 0 and stretch to the data maxima."""
    x_max, y_max = _extent(series)
    lines, px, py = _frame(title, x_label, y_label, x_max, y_max)
    for idx, (label, xs, ys) in enumerate(series):
        color = COLORS[idx % len(COLORS)]
        points = " ".join(f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys))
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{points}"/>')
        _legend(lines, idx, label, color, "line")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_scatter(
    title: str, x_label: str, y_label: str, series: Sequence[Series], radius: float = 4.0
) -> str:
    """One marker per point, one colour per series; same axes as the line chart."""
    x_max, y_max = _extent(series)
    lines, px, py = _frame(title, x_label, y_label, x_max, y_max)
    for idx, (label, xs, ys) in enumerate(series):
        color = COLORS[idx % len(COLORS)]
        for x, y in zip(xs, ys):
            lines.append(f'<circle cx="{px(float(x)):.2f}" cy="{py(float(y)):.2f}" r="{radius:g}" fill="{color}" fill-opacity="0.8"/>')
        _legend(lines, idx, label, color, "point")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_bar_chart(
    title: str,
    y_label: str,
    labels: Sequence[str],
    values: Sequence[float],
    spans: Sequence[Tuple[float, float]] = (),
) -> str:
    """Vertical bars; ``spans`` adds a (low, high) whisker per bar."""
    if not labels:
        raise ValueError("nothing to plot")
    top_value = max([float(v) for v in values] + [float(hi) for _, hi in spans])
    y_max = (top_value or 1.0) * 1.1
    lines, _, py = _frame(title, "", y_label, 1.0, y_max, x_ticks=False)
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    bottom = HEIGHT - MARGIN_BOTTOM
    slot = (right - left) / len(labels)
    width = slot * 0.6
    for idx, (label, value) in enumerate(zip(labels, values)):
        color = COLORS[idx % len(COLORS)]
        x = left + idx * slot + (slot - width) / 2
        y = py(float(value))
        lines.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{width:.2f}" height="{bottom - y:.2f}" fill="{color}"/>')
        lines.append(
            f'<text x="{x + width / 2:.2f}" y="{bottom + 22}" text-anchor="middle" font-size="13" font-family="Arial">{_escape(label)}</text>'
        )
        if idx < len(spans):
            lo, hi = spans[idx]
            cx = x + width / 2
            lines.append(f'<line x1="{cx:.2f}" y1="{py(float(lo)):.2f}" x2="{cx:.2f}" y2="{py(float(hi)):.2f}" stroke="#000000" stroke-width="1.5"/>')
            for cap in (lo, hi):
                lines.append(
                    f'<line x1="{cx - 8:.2f}" y1="{py(float(cap)):.2f}" x2="{cx + 8:.2f}" y2="{py(float(cap)):.2f}" stroke="#000000" stroke-width="1.5"/>'
                )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _shade(t: float) -> str:
    """White to dark blue."""
    t = min(max(t, 0.0), 1.0)
    r = int(round(255 - t * (255 - 8)))
    g = int(round(255 - t * (255 - 48)))
    b = int(round(255 - t * (255 - 107)))
    return f"#{r:02x}{g:02x}{b:02x}"


def render_heatmap(
    title: str,
    matrix: np.ndarray,
    row_labels: Sequence[str] = (),
    col_labels: Sequence[str] = (),
) -> str:
    """Colour grid, row 0 at the top; NaN cells are drawn grey."""
    matrix = np.asarray(matrix, dtype=float)
    rows, cols = matrix.shape
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    cw = (right - left) / max(cols, 1)
    ch = (bottom - top) / max(rows, 1)
    finite = matrix[np.isfinite(matrix)]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 1.0
    span = hi - lo or 1.0

    lines = _header(title)
    for r in range(rows):
        for c in range(cols):
            v = matrix[r, c]
            fill = _shade((v - lo) / span) if np.isfinite(v) else "#bbbbbb"
            lines.append(
                f'<rect x="{left + c * cw:.2f}" y="{top + r * ch:.2f}" width="{cw:.2f}" height="{ch:.2f}" fill="{fill}" stroke="#ffffff" stroke-width="0.5"/>'
            )
    for r, label in enumerate(row_labels):
        lines.append(
            f'<text x="{left - 6}" y="{top + (r + 0.5) * ch + 4:.2f}" text-anchor="end" font-size="11" font-family="Arial">{_escape(label)}</text>'
        )
    for c, label in enumerate(col_labels):
        lines.append(
            f'<text x="{left + (c + 0.5) * cw:.2f}" y="{bottom + 18}" text-anchor="middle" font-size="11" font-family="Arial">{_escape(label)}</text>'
        )
    lines.append(
        f'<text x="{right + 20}" y="{top + 14}" font-size="12" font-family="Arial">min {_tick(lo)}</text>'
    )
    lines.append(
        f'<text x="{right + 20}" y="{top + 32}" font-size="12" font-family="Arial">max {_tick(hi)}</text>'
    )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def write_line_chart(path: Path, title: str, x_label: str, y_label: str, series: Sequence[Series]) -> Path:
    return write_text_atomic(path, render_line_chart(title, x_label, y_label, series))


def write_heatmap(path: Path, title: str, matrix: np.ndarray, row_labels=(), col_labels=()) -> Path:
    return write_text_atomic(path, render_heatmap(title, matrix, row_labels, col_labels))


def write_scatter(path: Path, title: str, x_label: str, y_label: str, series: Sequence[Series]) -> Path:
    return write_text_atomic(path, render_scatter(title, x_label, y_label, series))


def write_bar_chart(path: Path, title: str, y_label: str, labels, values, spans=()) -> Path:
    return write_text_atomic(path, render_bar_chart(title, y_label, labels, values, spans))
