"""Minimal self-contained SVG line charts on log-log axes."""

import math
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
WIDTH, HEIGHT = 640, 420
MARGIN = (70, 30, 40, 60)  # left, right, top, bottom


def _decades(lo, hi):
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def loglog_chart(series, title="", xlabel="phase t", ylabel="duality gap") -> str:
    """``series`` maps a label to (xs, ys); non-positive points are skipped."""
    clean = {}
    for name, (xs, ys) in series.items():
        pts = [(math.log10(x), math.log10(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
        if pts:
            clean[name] = pts
    left, right, top, bottom = MARGIN
    pw, ph = WIDTH - left - right, HEIGHT - top - bottom
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>']
    if not clean:
        out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT / 2}" text-anchor="middle">no positive data</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
    allx = [p[0] for pts in clean.values() for p in pts]
    ally = [p[1] for pts in clean.values() for p in pts]
    x0, x1 = min(allx), max(allx)
    y0, y1 = math.floor(min(ally)), math.ceil(max(ally))
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1:
        y1 = y0 + 1

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for d in _decades(y0, y1):
        y = sy(d)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">1e{d}</text>')
    for v in _decades(x0, x1):
        for mult in (1, 2, 5):
            lx = v + math.log10(mult)
            if x0 - 1e-9 <= lx <= x1 + 1e-9:
                x = sx(lx)
                out.append(f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{top + ph}" stroke="#eee"/>')
                out.append(f'<text x="{x:.2f}" y="{top + ph + 16}" text-anchor="middle">'
                           f'{mult * 10 ** v:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>')
    for i, (name, pts) in enumerate(clean.items()):
        color = COLORS[i % len(COLORS)]
        path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw - 130}" y1="{ly - 4}" x2="{left + pw - 110}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 104}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
