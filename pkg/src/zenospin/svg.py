"""Minimal SVG line charts (small multiples, linear or log axes)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#2ca02c", "#d62728", "#ff7f0e", "#9467bd", "#8c564b")
DASHES = ("", "6,3", "2,2", "8,3,2,3")


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    xlog: bool = False
    ylog: bool = False
    series: dict[str, tuple[list[float], list[float]]] = field(default_factory=dict)
    vlines: list[float] = field(default_factory=list)


def _transform(values, log):
    if log:
        return [math.log10(v) if v > 0 else math.nan for v in values]
    return list(values)


def _ticks(lo: float, hi: float, log: bool) -> list[tuple[float, str]]:
    if log:
        mantissas = (1, 2, 5) if hi - lo < 2 else (1,)
        out = []
        for e in range(math.floor(lo), math.ceil(hi) + 1):
            for m in mantissas:
                v = e + math.log10(m)
                if lo - 1e-12 <= v <= hi + 1e-12:
                    out.append((v, f"1e{e}" if m == 1 else f"{m * 10.0**e:g}"))
        return out
    span = hi - lo or 1.0
    step = 10 ** math.floor(math.log10(span / 4))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * span:
        out.append((v, f"{v:.3g}"))
        v += step
    return out


def _panel_svg(p: Panel, x0: float, y0: float, w: float, h: float) -> list[str]:
    ml, mr, mt, mb = 62, 10, 22, 36
    pw, ph = w - ml - mr, h - mt - mb
    xs_all, ys_all = [], []
    for xs, ys in p.series.values():
        xs_all += [v for v in _transform(xs, p.xlog) if math.isfinite(v)]
        ys_all += [v for v in _transform(ys, p.ylog) if math.isfinite(v)]
    out = [f'<g transform="translate({x0:.1f},{y0:.1f})">']
    out.append(f'<text x="{w / 2:.1f}" y="14" text-anchor="middle" font-size="12">{escape(p.title)}</text>')
    if not xs_all or not ys_all:
        out.append("</g>")
        return out
    xlo, xhi = min(xs_all), max(xs_all)
    ylo, yhi = min(ys_all), max(ys_all)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5

    def sx(v):
        return ml + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return mt + ph - (v - ylo) / (yhi - ylo) * ph

    out.append(f'<rect x="{ml}" y="{mt}" width="{pw:.1f}" height="{ph:.1f}" fill="none" stroke="#000"/>')
    for v, lab in _ticks(xlo, xhi, p.xlog):
        out.append(f'<line x1="{sx(v):.1f}" y1="{mt + ph:.1f}" x2="{sx(v):.1f}" y2="{mt + ph + 4:.1f}" stroke="#000"/>')
        out.append(f'<text x="{sx(v):.1f}" y="{mt + ph + 15:.1f}" text-anchor="middle" font-size="9">{lab}</text>')
    for v, lab in _ticks(ylo, yhi, p.ylog):
        out.append(f'<line x1="{ml - 4}" y1="{sy(v):.1f}" x2="{ml}" y2="{sy(v):.1f}" stroke="#000"/>')
        out.append(f'<text x="{ml - 6}" y="{sy(v) + 3:.1f}" text-anchor="end" font-size="9">{lab}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{h - 4:.1f}" text-anchor="middle" font-size="10">{escape(p.xlabel)}</text>')
    out.append(
        f'<text x="12" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="10" '
        f'transform="rotate(-90 12 {mt + ph / 2:.1f})">{escape(p.ylabel)}</text>'
    )
    for xv in p.vlines:
        (tv,) = _transform([xv], p.xlog)
        if math.isfinite(tv) and xlo <= tv <= xhi:
            out.append(f'<line x1="{sx(tv):.1f}" y1="{mt}" x2="{sx(tv):.1f}" y2="{mt + ph:.1f}" stroke="#888" stroke-dasharray="3,3"/>')
    for i, (name, (xs, ys)) in enumerate(p.series.items()):
        pts = [
            f"{sx(a):.2f},{sy(b):.2f}"
            for a, b in zip(_transform(xs, p.xlog), _transform(ys, p.ylog))
            if math.isfinite(a) and math.isfinite(b)
        ]
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[i % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.3"{dash_attr} points="{" ".join(pts)}"/>')
        out.append(f'<text x="{ml + 6}" y="{mt + 12 + 11 * i}" font-size="9" fill="{color}">{escape(name)}</text>')
    out.append("</g>")
    return out


def render(panels: list[Panel], ncols: int = 3, width: float = 320, height: float = 240) -> str:
    ncols = max(1, min(ncols, len(panels)))
    nrows = math.ceil(len(panels) / ncols) if panels else 1
    body = []
    for i, p in enumerate(panels):
        r, c = divmod(i, ncols)
        body += _panel_svg(p, c * width, r * height, width, height)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{ncols * width:.0f}" height="{nrows * height:.0f}" '
        f'font-family="sans-serif">\n' + "\n".join(body) + "\n</svg>\n"
    )
