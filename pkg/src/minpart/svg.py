"""Plain SVG figures for nodal sets and partitions."""

from __future__ import annotations

import html
import math

import numpy as np
from skimage import measure

__all__ = ["nodal_set_svg", "partition_svg"]

PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860")
WIDTH = 480


class _Canvas:
    def __init__(self, bounds, width=WIDTH, pad=20, metadata=None):
        self.xmin, self.xmax, self.ymin, self.ymax = bounds
        self.scale = (width - 2 * pad) / (self.xmax - self.xmin)
        self.pad = pad
        self.w = width
        self.h = int(round((self.ymax - self.ymin) * self.scale + 2 * pad))
        self.items: list[str] = []
        self.metadata = metadata

    def pt(self, x, y):
        return (self.pad + (x - self.xmin) * self.scale, self.h - self.pad - (y - self.ymin) * self.scale)

    def polyline(self, pts, stroke="#000", width=1.5, fill="none", closed=False):
        if len(pts) < 2:
            return
        coords = " ".join("%.2f,%.2f" % self.pt(x, y) for x, y in pts)
        tag = "polygon" if closed else "polyline"
        self.items.append(f'<{tag} points="{coords}" fill="{fill}" stroke="{stroke}" stroke-width="{width}"/>')

    def circle(self, x, y, r=4, fill="#d62728"):
        cx, cy = self.pt(x, y)
        self.items.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r}" fill="{fill}"/>')

    def text(self, x, y, s, size=11):
        cx, cy = self.pt(x, y)
        self.items.append(f'<text x="{cx:.2f}" y="{cy:.2f}" font-size="{size}" '
                          f'font-family="sans-serif">{html.escape(s)}</text>')

    def outline(self):
        self.polyline([(self.xmin, self.ymin), (self.xmax, self.ymin), (self.xmax, self.ymax),
                       (self.xmin, self.ymax)], closed=True, width=2)

    def render(self) -> str:
        meta = ""
        if self.metadata is not None:
            meta = f"<metadata>{html.escape(self.metadata)}</metadata>\n"
        body = "\n".join(self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}">\n{meta}{body}\n</svg>\n')


def nodal_set_svg(nodal_set, metadata: str | None = None) -> str:
    """Rectangle, zero-set polylines, boundary hits and critical points."""
    eps = nodal_set.eps
    c = _Canvas((-math.pi * eps / 2, math.pi * eps / 2, -math.pi / 2, math.pi / 2), metadata=metadata)
    c.outline()
    for line in nodal_set.polylines:
        c.polyline(line, stroke="#1f77b4", width=2)
    for p in nodal_set.boundary_hits:
        c.circle(p.x, p.y, r=3, fill="#2ca02c" if p.valence == 1 else "#d62728")
    for p in nodal_set.interior_critical_points:
        c.circle(p.x, p.y, r=5)
    c.text(-math.pi * eps / 2, math.pi / 2 + 0.05,
           f"alpha={nodal_set.coeffs.alpha:g}  beta={nodal_set.coeffs.beta:g}")
    return c.render()


def partition_svg(partition, angles=None, metadata: str | None = None) -> str:
    """Filled parts, junctions, boundary hits and optional angle labels."""
    g = partition.grid
    c = _Canvas((g.xmin, g.xmax, g.ymin, g.ymax), metadata=metadata)
    X, Y = g.x, g.y
    ids = [int(v) for v in np.unique(partition.labels) if v > 0]
    for k, v in enumerate(ids):
        mask = np.pad((partition.labels == v).astype(float), 1)
        for contour in measure.find_contours(mask, 0.5):
            ii = np.clip(contour[:, 0] - 1, 0, len(X) - 1)
            jj = np.clip(contour[:, 1] - 1, 0, len(Y) - 1)
            xs = np.interp(ii, np.arange(len(X)), X)
            ys = np.interp(jj, np.arange(len(Y)), Y)
            c.polyline(list(zip(xs, ys)), stroke="#222", width=1.0,
                       fill=PALETTE[k % len(PALETTE)], closed=True)
    c.outline()
    for x, y, nu in partition.critical_points:
        c.circle(x, y, r=5)
        if angles is not None:
            c.text(x + 0.08, y + 0.08, " ".join(f"{math.degrees(a):.1f}" for a in angles))
    for x, y, _ in partition.boundary_points:
        c.circle(x, y, r=3, fill="#2ca02c")
    c.text(g.xmin, g.ymax + 0.05, f"Lambda={partition.Lambda:.5f}  {partition.topology}")
    return c.render()
