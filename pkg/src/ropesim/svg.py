"""Minimal static SVG line charts (axes, ticks, polylines, legend)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
MAX_POINTS = 4000


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)

    def add(self, label, x, y, dashed=False) -> "Panel":
        self.series.append(Series(label, np.asarray(x, dtype=float), np.asarray(y, dtype=float), dashed))
        return self


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t = start + len(ticks) * step
    return ticks


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if 1e-3 <= abs(v) < 1e5:
        return f"{v:.6g}"
    return f"{v:.2e}"


def _thin(x, y):
    if len(x) <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).astype(int))
    return x[idx], y[idx]


def _range(values):
    finite = values[np.isfinite(values)] if len(values) else values
    if len(finite) == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def _panel_svg(p: Panel, ox: float, oy: float, w: float, h: float) -> list[str]:
    ml, mr, mt, mb = 70, 15, 30, 45
    pw, ph = w - ml - mr, h - mt - mb
    xs = np.concatenate([s.x for s in p.series]) if p.series else np.array([0.0, 1.0])
    ys = np.concatenate([s.y for s in p.series]) if p.series else np.array([0.0, 1.0])
    x0, x1 = _range(xs)
    y0, y1 = _range(ys)

    def px(v):
        return ox + ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return oy + mt + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [f'<rect x="{ox + ml:.2f}" y="{oy + mt:.2f}" width="{pw:.2f}" height="{ph:.2f}" '
           'fill="none" stroke="#000"/>']
    for t in nice_ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{oy + mt + ph:.2f}" x2="{X:.2f}" y2="{oy + mt + ph + 5:.2f}" stroke="#000"/>')
        out.append(f'<text x="{X:.2f}" y="{oy + mt + ph + 18:.2f}" text-anchor="middle">{_fmt(t)}</text>')
    for t in nice_ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{ox + ml - 5:.2f}" y1="{Y:.2f}" x2="{ox + ml:.2f}" y2="{Y:.2f}" stroke="#000"/>')
        out.append(f'<text x="{ox + ml - 8:.2f}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{ox + ml + pw / 2:.2f}" y="{oy + 18:.2f}" text-anchor="middle" '
               f'font-weight="bold">{escape(p.title)}</text>')
    out.append(f'<text x="{ox + ml + pw / 2:.2f}" y="{oy + h - 8:.2f}" text-anchor="middle">{escape(p.xlabel)}</text>')
    cx, cy = ox + 16, oy + mt + ph / 2
    out.append(f'<text x="{cx:.2f}" y="{cy:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 {cx:.2f} {cy:.2f})">{escape(p.ylabel)}</text>')
    for i, s in enumerate(p.series):
        color = COLORS[i % len(COLORS)]
        x, y = _thin(s.x, s.y)
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = oy + mt + 14 + 16 * i
        lx = ox + ml + pw - 150
        out.append(f'<line x1="{lx:.2f}" y1="{ly - 4:.2f}" x2="{lx + 20:.2f}" y2="{ly - 4:.2f}" '
                   f'stroke="{color}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{lx + 26:.2f}" y="{ly:.2f}">{escape(s.label)}</text>')
    return out


def render(panels: list[Panel], panel_width: int = 480, panel_height: int = 360) -> str:
    """Panels side by side in one standalone SVG document."""
    width, height = panel_width * len(panels), panel_height
    body = []
    for i, p in enumerate(panels):
        body.extend(_panel_svg(p, i * panel_width, 0, panel_width, panel_height))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
            f'<rect width="{width}" height="{height}" fill="#fff"/>\n'
            + "\n".join(body) + "\n</svg>\n")


def write_svg(panels: list[Panel], path, **kw) -> None:
    with open(path, "w") as fh:
        fh.write(render(panels, **kw))
