"""Minimal static SVG line charts.

Only what the command-line tool needs: several polylines on shared axes,
optional log-scaled x axis, tick labels and a legend.  Output is a plain
string, so identical data produce identical files.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_chart"]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _nice_ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step) + 1)]


def line_chart(series, title="", xlabel="", ylabel="", logx=False,
               width=720, height=420) -> str:
    """Render ``series`` as an SVG document.

    Parameters
    ----------
    series : list of (label, x, y)
        Non-finite samples are dropped.
    logx : bool
        Use a base-10 logarithmic x axis (x must be positive).
    """
    ml, mr, mt, mb = 70, 160, 40, 55
    pw, ph = width - ml - mr, height - mt - mb
    clean = []
    for label, x, y in series:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        clean.append((label, x[ok], y[ok]))
    xs = np.concatenate([c[1] for c in clean if len(c[1])] or [np.array([1.0, 10.0])])
    ys = np.concatenate([c[2] for c in clean if len(c[2])] or [np.array([0.0, 1.0])])
    tx = np.log10 if logx else (lambda v: np.asarray(v, float))
    x0, x1 = float(tx(xs.min())), float(tx(xs.max()))
    if x1 == x0:
        x1 = x0 + 1.0
    y0, y1 = float(ys.min()), float(ys.max())
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad

    def px(v):
        return ml + (float(tx(v)) - x0) / (x1 - x0) * pw

    def py(v):
        return mt + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    if logx:
        xt = [10.0 ** e for e in range(math.ceil(x0), math.floor(x1) + 1)]
        fmt = lambda v: f"{v:g}"
    else:
        xt = _nice_ticks(x0, x1)
        fmt = lambda v: f"{v:.4g}"
    for v in xt:
        X = px(v)
        out.append(f'<line x1="{X:.2f}" y1="{mt}" x2="{X:.2f}" y2="{mt + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{X:.2f}" y="{mt + ph + 15}" text-anchor="middle">{fmt(v)}</text>')
    for v in _nice_ticks(y0, y1):
        Y = py(v)
        out.append(f'<line x1="{ml}" y1="{Y:.2f}" x2="{ml + pw}" y2="{Y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{ml - 6}" y="{Y + 4:.2f}" text-anchor="end">{v:.4g}</text>')
    for i, (label, x, y) in enumerate(clean):
        if not len(x):
            continue
        col = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.4" points="{pts}"/>')
        ly = mt + 14 * i + 8
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" '
                   f'stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 35}" y="{ly + 4}">{escape(str(label))}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{mt - 14}" text-anchor="middle" '
               f'font-size="13">{escape(title)}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
