"""Hand-written SVG emitters for leaf, bar and violin plots.

Output is byte-stable: fixed element order, fixed number formatting and no
timestamps or random ids.
"""

from __future__ import annotations

from html import escape
from typing import Sequence

import numpy as np

from .geometry import COLORS

HEX = {"red": "#d62728", "pink": "#e377c2", "yellow": "#d4b80b", "green": "#2ca02c",
       "purple": "#9467bd", "brown": "#8c564b", "blue": "#1f77b4", "black": "#000000",
       "orange": "#ff7f0e"}
FALLBACK = "#7f7f7f"

W, H = 640, 440
MARGIN = (60, 20, 30, 50)  # left, right, top, bottom


def design_color(name: str) -> str:
    return HEX.get(COLORS.get(name, ""), FALLBACK)


def _f(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Canvas:
    def __init__(self, xlim, ylim, title: str, xlabel: str, ylabel: str):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2:g}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        ]
        self._axes(xlabel, ylabel)

    def sx(self, x):
        left, right = MARGIN[0], W - MARGIN[1]
        return left + (np.asarray(x, float) - self.x0) / (self.x1 - self.x0) * (right - left)

    def sy(self, y):
        top, bottom = MARGIN[2], H - MARGIN[3]
        return bottom - (np.asarray(y, float) - self.y0) / (self.y1 - self.y0) * (bottom - top)

    def _axes(self, xlabel, ylabel):
        left, right, top, bottom = MARGIN[0], W - MARGIN[1], MARGIN[2], H - MARGIN[3]
        self.parts.append(f'<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" '
                          f'fill="none" stroke="black"/>')
        for v in np.linspace(self.x0, self.x1, 6):
            x = _f(float(self.sx(v)))
            self.parts.append(f'<text x="{x}" y="{bottom + 15}" text-anchor="middle">{_f(v)}</text>')
        for v in np.linspace(self.y0, self.y1, 6):
            y = _f(float(self.sy(v)))
            self.parts.append(f'<text x="{left - 5}" y="{y}" text-anchor="end">{_f(v)}</text>')
        self.parts.append(f'<text x="{(left + right) / 2:g}" y="{H - 12}" '
                          f'text-anchor="middle">{escape(xlabel)}</text>')
        self.parts.append(f'<text x="14" y="{(top + bottom) / 2:g}" text-anchor="middle" '
                          f'transform="rotate(-90 14 {(top + bottom) / 2:g})">{escape(ylabel)}</text>')

    def path(self, xs, ys, color: str, closed: bool, **attrs):
        px, py = self.sx(xs), self.sy(ys)
        pts = " L".join(f"{_f(a)},{_f(b)}" for a, b in zip(px.tolist(), py.tolist()))
        extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
        self.parts.append(f'<path d="M{pts}{" Z" if closed else ""}" fill="none" '
                          f'stroke="{color}"{extra}/>')

    def rect(self, x0, x1, y0, y1, color: str):
        ax, bx = float(self.sx(x0)), float(self.sx(x1))
        ay, by = float(self.sy(y1)), float(self.sy(y0))
        self.parts.append(f'<rect x="{_f(ax)}" y="{_f(ay)}" width="{_f(bx - ax)}" '
                          f'height="{_f(by - ay)}" fill="{color}"/>')

    def polygon(self, xs, ys, color: str):
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(self.sx(xs).tolist(), self.sy(ys).tolist()))
        self.parts.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.6" '
                          f'stroke="{color}"/>')

    def legend(self, entries: Sequence[tuple[str, str]]):
        x = W - MARGIN[1] - 170
        for i, (label, color) in enumerate(entries):
            y = MARGIN[2] + 12 + 14 * i
            self.parts.append(f'<rect x="{x}" y="{y - 8}" width="10" height="10" fill="{color}"/>')
            self.parts.append(f'<text x="{x + 14}" y="{y}">{escape(label)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def plot_leaf(records, title: str = "Angle vs. pressure") -> str:
    """One closed path per cycle, coloured by design."""
    records = list(records)
    cycles = [(r.spec.design_name, c) for r in records for c in r.cycles]
    if not cycles:
        raise ValueError("no cycles to plot")
    pmax = max(c.max_pressure for _, c in cycles)
    amax = max(c.max_angle for _, c in cycles)
    cv = _Canvas((0.0, pmax), (0.0, amax), title, "Pressure (kPa)", "Bending angle (deg)")
    for name, c in cycles:
        cv.path(c.pressure, c.angle, design_color(name), closed=True, stroke_width="0.8")
    seen = list(dict.fromkeys(n for n, _ in cycles))
    cv.legend([(n, design_color(n)) for n in seen])
    return cv.render()


def plot_bars(rows: Sequence[dict], value: str = "max_angle_deg",
              title: str = "Dynamic response") -> str:
    """Grouped bars: one group per pk-pk pressure, one bar per design."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to plot")
    pressures = sorted({r["pkpk_kPa"] for r in rows})
    designs = list(dict.fromkeys(r["design"] for r in rows))
    vmax = max(r[value] for r in rows)
    cv = _Canvas((0.0, float(len(pressures))), (0.0, vmax), title,
                 "Peak-to-peak pressure group: " + ", ".join(_f(p) for p in pressures) + " kPa",
                 value)
    width = 0.8 / len(designs)
    lookup = {(r["design"], r["pkpk_kPa"]): r[value] for r in rows}
    for gi, p in enumerate(pressures):
        for di, d in enumerate(designs):
            if (d, p) in lookup:
                x0 = gi + 0.1 + di * width
                cv.rect(x0, x0 + width, 0.0, lookup[(d, p)], design_color(d))
    cv.legend([(d, design_color(d)) for d in designs])
    return cv.render()


def plot_violins(slices: Sequence[np.ndarray], design: str = "", bins: int = 24,
                 title: str = "Von Mises stress per slice") -> str:
    """Mirrored histogram densities, one violin per longitudinal slice."""
    slices = [np.asarray(s, dtype=float) for s in slices]
    if not slices or all(s.size == 0 for s in slices):
        raise ValueError("no stress values to plot")
    vmax = max(float(s.max()) for s in slices if s.size)
    cv = _Canvas((0.0, float(len(slices))), (0.0, vmax), title, "Slice", "Stress (MPa)")
    color = design_color(design)
    edges = np.linspace(0.0, vmax if vmax > 0 else 1.0, bins + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    for k, s in enumerate(slices):
        if s.size == 0:
            continue
        hist, _ = np.histogram(s, edges)
        half = 0.45 * hist / hist.max()
        keep = hist > 0
        ys = mids[keep]
        xs_r = k + 0.5 + half[keep]
        xs_l = k + 0.5 - half[keep]
        cv.polygon(np.concatenate([xs_r, xs_l[::-1]]), np.concatenate([ys, ys[::-1]]), color)
        med = float(np.median(s))
        cv.path([k + 0.3, k + 0.7], [med, med], "black", closed=False)
    return cv.render()
