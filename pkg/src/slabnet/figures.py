"""Deterministic SVG figures: the stretched model matrix and RSS-vs-size.

Documents are plain strings with fixed-precision coordinates, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .summaries import ModelTable, fit_metrics
from .terms import DesignMatrix

_HEADER = ('<?xml version="1.0" encoding="UTF-8"?>\n'
           '<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           'viewBox="0 0 {w} {h}">\n')


def _f(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def _rect(x, y, w, h, fill, cls=None, stroke=None):
    c = f' class="{cls}"' if cls else ""
    s = f' stroke="{stroke}" stroke-width="0.5"' if stroke else ""
    return (f'<rect{c} x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" '
            f'height="{_f(h)}" fill="{fill}"{s}/>\n')


def _line(x1, y1, x2, y2, stroke="black", width=1.0):
    return (f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{stroke}" stroke-width="{_f(width)}"/>\n')


def _text(x, y, s, size=10, anchor="middle", rotate=None):
    t = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
    return (f'<text x="{_f(x)}" y="{_f(y)}" font-family="monospace" '
            f'font-size="{size}" text-anchor="{anchor}"{t}>{s}</text>\n')


def render_model_matrix(table: ModelTable, top_n: int = 100,
                        stretched: bool = True, separators: int = 10,
                        plot_height: float = 400.0) -> str:
    """Matrix of activation patterns, one stretched row per model.

    The most probable model sits at the bottom; row heights are
    proportional to posterior probability (equal when ``stretched`` is
    False), active cells are black, and the ``separators`` most probable
    models are set off by horizontal lines.  Node labels run along the
    bottom.
    """
    if len(table) == 0:
        raise ValueError("empty model table")
    k = min(top_n, len(table))
    probs = table.posterior[:k].astype(float)
    p = table.patterns.shape[1]
    labels = table.labels or tuple(f"n{i}" for i in range(p))

    cell_w = max(12.0, 260.0 / p)
    left, top, right, bottom = 40.0, 10.0, 10.0, 70.0
    plot_w = cell_w * p
    width = left + plot_w + right
    height = top + plot_height + bottom
    if stretched:
        heights = probs / probs.sum() * plot_height
    else:
        heights = np.full(k, plot_height / k)

    out = [_HEADER.format(w=_f(width), h=_f(height))]
    out.append(_rect(0, 0, width, height, "white"))
    y = top + plot_height  # bottom edge; most probable model first
    for i in range(k):
        y -= heights[i]
        for j in range(p):
            fill = "black" if table.patterns[i, j] else "white"
            out.append(_rect(left + j * cell_w, y, cell_w, heights[i], fill,
                             cls="cell"))
    # separator lines above each of the most probable models
    y = top + plot_height
    for i in range(min(separators, k)):
        y -= heights[i]
        out.append(_line(left, y, left + plot_w, y, stroke="black", width=1.0))
    out.append(_rect(left, top, plot_w, plot_height, "none", stroke="black"))
    for j in range(p):
        out.append(_text(left + (j + 0.5) * cell_w, top + plot_height + 12,
                         labels[j], size=9, anchor="end", rotate=-60))
    out.append("</svg>\n")
    return "".join(out)


def render_trace_matrix(samples, labels=None, max_rows: int = 400,
                        plot_height: float = 400.0) -> str:
    """Diagnostic variant: equal-height rows in sampling order.

    Long chains are strided down to ``max_rows`` rows; a chain stuck in
    one neighbourhood shows up as long vertical bands.
    """
    arr = np.asarray(samples, dtype=np.uint8)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("need a non-empty samples x nodes array")
    stride = max(1, -(-arr.shape[0] // max_rows))
    arr = arr[::stride]
    table = ModelTable(arr, np.full(arr.shape[0], 1.0 / arr.shape[0]),
                       labels=tuple(labels) if labels is not None else None)
    return render_model_matrix(table, top_n=arr.shape[0], stretched=False,
                               separators=0, plot_height=plot_height)


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def render_rss_size(table: ModelTable, design: DesignMatrix, response,
                    top_k: int = 10, overlay=None) -> str:
    """Scatter of (number of active terms, residual sum of squares) for the
    top posterior models, with optional overlay series (e.g. an externally
    computed stepwise path) given as a sequence of (size, rss) pairs."""
    if len(table) == 0:
        raise ValueError("empty model table")
    k = min(top_k, len(table))
    sizes = table.patterns[:k].sum(axis=1).astype(float)
    if table.rss is not None:
        rss = table.rss[:k].astype(float)
    else:
        rss = np.asarray([fit_metrics(row, design, response).rss
                          for row in table.patterns[:k]])
    xs, ys = list(sizes), list(rss)
    over = [(float(a), float(b)) for a, b in (overlay or [])]
    all_x = xs + [a for a, _ in over]
    all_y = ys + [b for _, b in over]
    x_lo, x_hi = 0.0, max(all_x) * 1.05 + 1e-9
    y_lo, y_hi = 0.0, max(all_y) * 1.05 + 1e-9

    left, top, right, bottom = 70.0, 15.0, 15.0, 45.0
    pw, ph = 420.0, 300.0
    width, height = left + pw + right, top + ph + bottom
    sx = lambda v: left + (v - x_lo) / (x_hi - x_lo) * pw
    sy = lambda v: top + ph - (v - y_lo) / (y_hi - y_lo) * ph

    out = [_HEADER.format(w=_f(width), h=_f(height))]
    out.append(_rect(0, 0, width, height, "white"))
    out.append(_line(left, top + ph, left + pw, top + ph))
    out.append(_line(left, top, left, top + ph))
    for tx in _ticks(x_lo, x_hi):
        out.append(_line(sx(tx), top + ph, sx(tx), top + ph + 4))
        out.append(_text(sx(tx), top + ph + 16, f"{tx:.3g}", size=9))
    for ty in _ticks(y_lo, y_hi):
        out.append(_line(left - 4, sy(ty), left, sy(ty)))
        out.append(_text(left - 6, sy(ty) + 3, f"{ty:.4g}", size=9, anchor="end"))
    out.append(_text(left + pw / 2, height - 8, "active terms", size=10))
    out.append(_text(14, top + ph / 2, "RSS", size=10, rotate=-90))
    if over:
        pts = " ".join(f"{_f(sx(a))},{_f(sy(b))}" for a, b in over)
        out.append(f'<polyline class="overlay" points="{pts}" fill="none" '
                   'stroke="gray" stroke-width="1"/>\n')
    for x, yv in zip(xs, ys):
        out.append(f'<circle class="pt" cx="{_f(sx(x))}" cy="{_f(sy(yv))}" '
                   'r="3" fill="black"/>\n')
    out.append("</svg>\n")
    return "".join(out)
