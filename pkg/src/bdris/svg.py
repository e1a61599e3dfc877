"""Minimal log-log line chart written as standalone SVG."""

import math
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def loglog_svg(series, xlabel="N", ylabel="received power (W)", width=640, height=440):
    """
    Parameters
    ----------
    series : list of (label, xs, ys, dashed)
        Non-positive points are skipped.
    """
    pts = [(x, y) for _, xs, ys, _ in series for x, y in zip(xs, ys) if x > 0 and y > 0]
    if not pts:
        raise ValueError("nothing to plot")
    lx = [math.log10(x) for x, _ in pts]
    ly = [math.log10(y) for _, y in pts]
    x0, x1 = min(lx), max(lx)
    y0, y1 = math.floor(min(ly)), math.ceil(max(ly))
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y1 = y0 + 1
    ml, mr, mt, mb = 70, 150, 20, 50
    pw, ph = width - ml - mr, height - mt - mb

    def px(v):
        return ml + (math.log10(v) - x0) / (x1 - x0) * pw

    def py(v):
        return mt + (1 - (math.log10(v) - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(int(y0), int(y1) + 1):
        y = mt + (1 - (e - y0) / (y1 - y0)) * ph
        out.append(f'<line x1="{ml - 4}" y1="{y:.2f}" x2="{ml}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    xticks = sorted({x for x, _ in pts})
    for x in xticks:
        X = px(x)
        out.append(f'<line x1="{X:.2f}" y1="{mt + ph}" x2="{X:.2f}" y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{mt + ph + 16}" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {mt + ph / 2})">{escape(ylabel)}</text>'
    )
    for i, (label, xs, ys, dashed) in enumerate(series):
        color = COLORS[i // 2 % len(COLORS)] if len(series) > 1 else COLORS[0]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if x > 0 and y > 0)
        dash = ' stroke-dasharray="5,4"' if dashed else ""
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly_ = mt + 14 * i + 10
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly_}" x2="{ml + pw + 30}" y2="{ly_}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{ml + pw + 34}" y="{ly_ + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def sweep_svg(result):
    """Mean (solid) and analytic (dashed) curves per group size of a sweep."""
    series = []
    for Gs_key in _arch_keys(result):
        rows = [r for r in result.rows if _key(r) == Gs_key]
        xs = [r.N for r in rows]
        name = "full" if Gs_key == "full" else f"Gs={Gs_key}"
        series.append((f"{name} sim", xs, [r.mean_power for r in rows], False))
        if all(r.analytic_power is not None for r in rows):
            series.append((f"{name} analytic", xs, [r.analytic_power for r in rows], True))
    return loglog_svg(series)


def _key(row):
    return "full" if row.G == 1 and row.Gs > 1 else row.Gs


def _arch_keys(result):
    seen = []
    for r in result.rows:
        k = _key(r)
        if k not in seen:
            seen.append(k)
    return seen
