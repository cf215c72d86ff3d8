"""Minimal standalone SVG charts: line plots and step plots with axes and a
legend.  Output is a pure function of the input — coordinates are formatted
with fixed precision and nothing environmental (time, ids, hashes) leaks in —
so re-rendering the same series yields identical bytes.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fileio import atomic_write_text

KINDS = ("line", "step")

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")

WIDTH, HEIGHT = 640, 420
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 64, 20, 34, 48
TICKS = 5


@dataclass(frozen=True)
class Series:
    name: str
    x: np.ndarray
    y: np.ndarray


def _as_series(name, x, y) -> Series:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise DomainError(f"series {name!r}: x and y must be equal-length vectors")
    if x.size == 0:
        raise DomainError(f"series {name!r} is empty")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DomainError(f"series {name!r} contains non-finite values")
    return Series(str(name), x, y)


def _axis_range(lo: float, hi: float, label: str) -> tuple:
    if lo == hi:
        warnings.warn(f"degenerate {label} range [{lo}, {hi}]; padding axis")
        pad = 0.5 if lo == 0.0 else abs(lo) * 0.5
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


def _escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def render_svg(series, kind: str, path=None, title: str = "",
               x_label: str = "", y_label: str = "") -> str:
    """Render named series to SVG text; also writes it when `path` is given.

    `series` is a sequence of (name, x, y) triples or Series objects.  Step
    plots hold each y flat until the next x, then drop — the survival-curve
    convention.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown plot kind {kind!r}")
    named = [s if isinstance(s, Series) else _as_series(*s) for s in series]
    if not named:
        raise DomainError("render_svg needs at least one series")

    x_lo, x_hi = _axis_range(min(s.x.min() for s in named),
                             max(s.x.max() for s in named), "x")
    y_lo, y_hi = _axis_range(min(s.y.min() for s in named),
                             max(s.y.max() for s in named), "y")
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(v):
        return MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
           f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{_escape(title)}</text>')

    # axes box and ticks
    out.append(f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" '
               f'height="{plot_h}" fill="none" stroke="black"/>')
    for i in range(TICKS):
        fx = x_lo + (x_hi - x_lo) * i / (TICKS - 1)
        px = _fmt(sx(fx))
        out.append(f'<line x1="{px}" y1="{MARGIN_TOP + plot_h}" x2="{px}" '
                   f'y2="{MARGIN_TOP + plot_h + 5}" stroke="black"/>')
        out.append(f'<text x="{px}" y="{MARGIN_TOP + plot_h + 18}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="11">{_tick_label(fx)}</text>')
        fy = y_lo + (y_hi - y_lo) * i / (TICKS - 1)
        py = _fmt(sy(fy))
        out.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{py}" x2="{MARGIN_LEFT}" '
                   f'y2="{py}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{py}" text-anchor="end" '
                   f'dominant-baseline="middle" font-family="sans-serif" '
                   f'font-size="11">{_tick_label(fy)}</text>')
    if x_label:
        out.append(f'<text x="{MARGIN_LEFT + plot_w // 2}" y="{HEIGHT - 10}" '
                   f'text-anchor="middle" font-family="sans-serif" '
                   f'font-size="12">{_escape(x_label)}</text>')
    if y_label:
        cy = MARGIN_TOP + plot_h // 2
        out.append(f'<text x="16" y="{cy}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12" '
                   f'transform="rotate(-90 16 {cy})">{_escape(y_label)}</text>')

    for idx, s in enumerate(named):
        color = PALETTE[idx % len(PALETTE)]
        parts = [f"M {_fmt(sx(s.x[0]))} {_fmt(sy(s.y[0]))}"]
        for j in range(1, s.x.size):
            if kind == "step":
                parts.append(f"H {_fmt(sx(s.x[j]))}")
                parts.append(f"V {_fmt(sy(s.y[j]))}")
            else:
                parts.append(f"L {_fmt(sx(s.x[j]))} {_fmt(sy(s.y[j]))}")
        out.append(f'<path d="{" ".join(parts)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        if s.x.size == 1:  # a path with no segments is invisible; mark the point
            out.append(f'<circle cx="{_fmt(sx(s.x[0]))}" cy="{_fmt(sy(s.y[0]))}" '
                       f'r="3" fill="{color}"/>')

    # legend, top-right inside the plot box
    for idx, s in enumerate(named):
        lx = MARGIN_LEFT + plot_w - 150
        ly = MARGIN_TOP + 14 + idx * 16
        color = PALETTE[idx % len(PALETTE)]
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 28}" y="{ly + 4}" font-family="sans-serif" '
                   f'font-size="11">{_escape(s.name)}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        atomic_write_text(path, text)
    return text
