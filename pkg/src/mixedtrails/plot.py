"""Static SVG rendering of evidence curves."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

from .evidence import EvidenceCurve

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")
WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 80, 200, 20, 50


def _x_transform(kappas: Sequence[float], log_x: bool):
    if not log_x:
        return lambda k: float(k)
    pos = [k for k in kappas if k > 0]
    floor = (math.log10(min(pos)) - 1.0) if pos else 0.0
    # kappa = 0 is pinned one decade left of the smallest positive value
    return lambda k: math.log10(k) if k > 0 else floor


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def render_svg(curves: Sequence[EvidenceCurve], log_x: bool = False, title: str = "") -> str:
    """One polyline per hypothesis, +-3 standard-error bands where available."""
    if not curves or not any(c.points for c in curves):
        raise ValueError("nothing to plot: results table is empty")
    all_k = sorted({p.kappa for c in curves for p in c.points})
    tx = _x_transform(all_k, log_x)
    xs = [tx(k) for k in all_k]
    x_lo, x_hi = min(xs), max(xs)
    ys = []
    for c in curves:
        for p in c.points:
            band = 3.0 * (p.std_err or 0.0)
            ys += [p.log_ml - band, p.log_ml + band]
    y_lo, y_hi = min(ys), max(ys)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return TOP + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    out.append(f'<rect class="frame" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for k in all_k:
        x = px(tx(k))
        label = "0" if k == 0 else f"{k:g}"
        out.append(f'<line class="xtick" x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 16}" text-anchor="middle">{escape(label)}</text>')
    for y in _ticks(y_lo, y_hi):
        yy = py(y)
        out.append(f'<line class="ytick" x1="{LEFT - 4}" y1="{yy:.2f}" x2="{LEFT}" y2="{yy:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{yy + 4:.2f}" text-anchor="end">{y:.4g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 8}" text-anchor="middle">'
               f'concentration factor (kappa){" [log scale]" if log_x else ""}</text>')
    out.append(f'<text transform="translate(16,{TOP + ph / 2:.2f}) rotate(-90)" text-anchor="middle">'
               'log marginal likelihood</text>')
    for idx, c in enumerate(curves):
        color = PALETTE[idx % len(PALETTE)]
        pts = sorted(c.points, key=lambda p: p.kappa)
        name = quoteattr(c.name)
        if any(p.std_err is not None for p in pts):
            upper = [(px(tx(p.kappa)), py(p.log_ml + 3.0 * (p.std_err or 0.0))) for p in pts]
            lower = [(px(tx(p.kappa)), py(p.log_ml - 3.0 * (p.std_err or 0.0))) for p in reversed(pts)]
            poly = " ".join(f"{x:.2f},{y:.2f}" for x, y in upper + lower)
            out.append(f'<polygon class="band" data-hypothesis={name} points="{poly}" '
                       f'fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{px(tx(p.kappa)):.2f},{py(p.log_ml):.2f}" for p in pts)
        out.append(f'<polyline class="curve" data-hypothesis={name} points="{line}" '
                   f'fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = TOP + 12 + 16 * idx
        lx = LEFT + pw + 12
        out.append(f'<line class="legend-key" x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{lx + 26}" y="{ly + 4}">{escape(c.name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
