"""Minimal SVG line charts: polylines, axes, tick labels and horizontal rules.

The CSV files are the authoritative output; these pictures are a convenience.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from html import escape
from pathlib import Path

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]


@dataclass
class Series:
    label: str
    x: list
    y: list


@dataclass
class Panel:
    title: str
    series: list = field(default_factory=list)
    # (y value, label) pairs drawn as dashed black rules
    rules: list = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _panel_svg(panel: Panel, x0: float, y0: float, w: float, h: float) -> list:
    pad_l, pad_r, pad_t, pad_b = 60.0, 120.0, 28.0, 40.0
    pw, ph = w - pad_l - pad_r, h - pad_t - pad_b
    xs = [v for s in panel.series for v in s.x if math.isfinite(v)]
    ys = [v for s in panel.series for v in s.y if math.isfinite(v)]
    ys += [r[0] for r in panel.rules]
    if not xs or not ys:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    if xmax == xmin:
        xmax = xmin + 1.0
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    margin = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - margin, ymax + margin

    def px(v):
        return x0 + pad_l + (v - xmin) / (xmax - xmin) * pw

    def py(v):
        return y0 + pad_t + (ymax - v) / (ymax - ymin) * ph

    out = [
        f'<text x="{x0 + pad_l + pw / 2:.1f}" y="{y0 + 18:.1f}" text-anchor="middle" '
        f'font-size="14">{escape(panel.title)}</text>',
        f'<rect x="{x0 + pad_l:.1f}" y="{y0 + pad_t:.1f}" width="{pw:.1f}" height="{ph:.1f}" '
        'fill="none" stroke="#333"/>',
    ]
    for t in _ticks(xmin, xmax):
        out.append(f'<line x1="{px(t):.1f}" y1="{y0 + pad_t + ph:.1f}" x2="{px(t):.1f}" '
                   f'y2="{y0 + pad_t + ph + 4:.1f}" stroke="#333"/>')
        out.append(f'<text x="{px(t):.1f}" y="{y0 + pad_t + ph + 16:.1f}" text-anchor="middle" '
                   f'font-size="10">{_fmt(t)}</text>')
    for t in _ticks(ymin, ymax):
        out.append(f'<line x1="{x0 + pad_l - 4:.1f}" y1="{py(t):.1f}" x2="{x0 + pad_l:.1f}" '
                   f'y2="{py(t):.1f}" stroke="#333"/>')
        out.append(f'<text x="{x0 + pad_l - 6:.1f}" y="{py(t) + 3:.1f}" text-anchor="end" '
                   f'font-size="10">{_fmt(t)}</text>')
    if panel.xlabel:
        out.append(f'<text x="{x0 + pad_l + pw / 2:.1f}" y="{y0 + h - 6:.1f}" '
                   f'text-anchor="middle" font-size="11">{escape(panel.xlabel)}</text>')
    if panel.ylabel:
        cy = y0 + pad_t + ph / 2
        out.append(f'<text x="{x0 + 14:.1f}" y="{cy:.1f}" text-anchor="middle" font-size="11" '
                   f'transform="rotate(-90 {x0 + 14:.1f} {cy:.1f})">{escape(panel.ylabel)}</text>')
    for value, label in panel.rules:
        out.append(f'<line x1="{x0 + pad_l:.1f}" y1="{py(value):.1f}" x2="{x0 + pad_l + pw:.1f}" '
                   f'y2="{py(value):.1f}" stroke="black" stroke-dasharray="4 3"/>')
        if label:
            out.append(f'<text x="{x0 + pad_l + pw + 4:.1f}" y="{py(value) + 3:.1f}" '
                       f'font-size="9">{escape(label)}</text>')
    for i, s in enumerate(panel.series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(s.x, s.y)
                       if math.isfinite(a) and math.isfinite(b))
        if pts:
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = y0 + pad_t + 12 + 14 * i
        out.append(f'<line x1="{x0 + pad_l + pw + 8:.1f}" y1="{ly + 8:.1f}" '
                   f'x2="{x0 + pad_l + pw + 22:.1f}" y2="{ly + 8:.1f}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x0 + pad_l + pw + 26:.1f}" y="{ly + 11:.1f}" '
                   f'font-size="10">{escape(s.label)}</text>')
    return out


def render(panels, width: int = 720, panel_height: int = 260) -> str:
    """Stack ``panels`` vertically into one SVG document."""
    height = panel_height * len(panels)
    body = []
    for i, panel in enumerate(panels):
        body.extend(_panel_svg(panel, 0.0, float(i * panel_height), float(width), float(panel_height)))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">\n'
        '<rect width="100%" height="100%" fill="white"/>\n'
        + "\n".join(body) + "\n</svg>\n"
    )


def write_svg(panels, dest, **kwargs) -> None:
    Path(dest).write_text(render(panels, **kwargs))
