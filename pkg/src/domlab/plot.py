"""Self-contained SVG line charts of PoE traces (log-scaled time axis)."""
import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def aggregate(runs):
    """Mean and standard deviation across runs sharing the same times.

    ``runs`` is a list of (times, values). Returns (times, mean, sd) with
    sd = 0 for a single run.
    """
    times = list(runs[0][0])
    for t, _ in runs[1:]:
        if list(t) != times:
            raise ValueError("runs do not share checkpoint times")
    values = np.array([v for _, v in runs], dtype=float)
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=1) if len(runs) > 1 else np.zeros_like(mean)
    return np.array(times, dtype=float), mean, sd


def svg_chart(series, title="", ylabel="PoE", width=720, height=440):
    """Render [(label, times, mean, sd), ...] with x = log10 t and y in [0, 1].

    t = 0 has no place on a log axis and is skipped.
    """
    left, right, top, bottom = 70, 190, 40, 55
    pw, ph = width - left - right, height - top - bottom
    xs_all = [t for _, times, _, _ in series for t in times if t > 0]
    if not xs_all:
        raise ValueError("nothing to plot: every checkpoint is at t = 0")
    lo = math.floor(math.log10(min(xs_all)))
    hi = max(math.ceil(math.log10(max(xs_all))), lo + 1)

    def X(t):
        return left + (math.log10(t) - lo) / (hi - lo) * pw

    def Y(v):
        return top + (1.0 - min(max(v, 0.0), 1.0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for k in range(lo, hi + 1):
        x = X(10.0 ** k)
        out.append(f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{top + ph}" stroke="#e6e6e6"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">10<tspan dy="-6" font-size="9">{k}</tspan></text>')
    for j in range(6):
        v = j / 5
        y = Y(v)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#e6e6e6"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{v:.1f}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">round t</text>')
    out.append(f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, times, mean, sd) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        keep = np.asarray(times) > 0
        t, m, s = np.asarray(times)[keep], np.asarray(mean)[keep], np.asarray(sd)[keep]
        if np.any(s > 0):
            upper = [f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(t, m + s)]
            lower = [f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(t[::-1], (m - s)[::-1])]
            out.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.18" stroke="none"/>')
        pts = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(t, m))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = top + 14 + 20 * i
        lx = left + pw + 14
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" stroke-width="2.5"/>')
        out.append(f'<text x="{lx + 28}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
