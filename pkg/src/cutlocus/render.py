"""Deterministic SVG drawings of packings.

Element order follows array order and every coordinate is printed with a
fixed number of decimals, so the same packing always yields the same bytes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .packer import Packing
from .ridge import RidgeGraph


@dataclass(frozen=True)
class RenderStyle:
    tree_color: str = "#d62728"
    image_color: str = "#2ca02c"
    boundary_color: str = "#000000"
    triangle_color: str = "#b0b0b0"
    ridge_color: str = "#7b1fa2"
    tree_width: float = 2.0
    boundary_width: float = 1.2
    triangle_width: float = 0.5
    ridge_width: float = 1.5
    point_radius: float = 3.0
    labels: bool = True
    triangles: bool = True
    font_size: float = 11.0
    margin: float = 30.0
    scale: float | None = None  # pixels per length unit; None fits ``size``
    size: float = 800.0
    decimals: int = 3

    def __post_init__(self):
        if self.scale is not None and not self.scale > 0:
            raise ValueError("scale must be positive")
        if not self.margin >= 0 or not self.size > 0:
            raise ValueError("margin must be non-negative and size positive")


class _Canvas:
    def __init__(self, lo: np.ndarray, hi: np.ndarray, style: RenderStyle):
        ext = float(max(hi - lo)) or 1.0
        self.k = style.scale if style.scale is not None else style.size / ext
        self.lo, self.hi = lo, hi
        self.m = style.margin
        self.fmt = f"{{:.{style.decimals}f}}"
        self.width = (hi[0] - lo[0]) * self.k + 2 * self.m
        self.height = (hi[1] - lo[1]) * self.k + 2 * self.m

    def xy(self, p) -> tuple[str, str]:
        # y grows downward in SVG
        x = (p[0] - self.lo[0]) * self.k + self.m
        y = (self.hi[1] - p[1]) * self.k + self.m
        return self.fmt.format(x + 0.0), self.fmt.format(y + 0.0)

    def n(self, v: float) -> str:
        return self.fmt.format(v)


def render_svg(packing: Packing, style: RenderStyle = RenderStyle(),
               ridge: RidgeGraph | None = None, title: str | None = None) -> str:
    pts = packing.boundary_points
    allp = np.vstack([pts, packing.node_pos, packing.x_images])
    cv = _Canvas(allp.min(axis=0), allp.max(axis=0), style)
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{cv.n(cv.width)}" height="{cv.n(cv.height)}" '
        f'viewBox="0 0 {cv.n(cv.width)} {cv.n(cv.height)}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append('<rect width="100%" height="100%" fill="#ffffff"/>')

    if style.triangles:
        out.append(f'<g stroke="{style.triangle_color}" stroke-width="{style.triangle_width}" fill="none">')
        for p, c, a in packing.triangle_index.tolist():
            for q in (p, c):
                x1, y1 = cv.xy(packing.node_pos[q])
                x2, y2 = cv.xy(packing.x_images[a])
                out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
        out.append("</g>")

    poly = " ".join(",".join(cv.xy(p)) for p in pts)
    out.append(f'<polygon points="{poly}" fill="none" stroke="{style.boundary_color}" '
               f'stroke-width="{style.boundary_width}" stroke-linejoin="round"/>')

    tree = packing.tree
    out.append(f'<g stroke="{style.tree_color}" stroke-width="{style.tree_width}" stroke-linecap="round">')
    for c in range(1, len(tree)):
        x1, y1 = cv.xy(packing.node_pos[tree.parent[c]])
        x2, y2 = cv.xy(packing.node_pos[c])
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
    out.append("</g>")

    if ridge is not None:
        out.append(f'<g stroke="{style.ridge_color}" stroke-width="{style.ridge_width}" '
                   f'stroke-dasharray="6 4" fill="none">')
        for e in ridge.edges:
            a, b = ridge.vertices[e.a], ridge.vertices[e.b]
            x1, y1 = cv.xy((a.x, a.y))
            x2, y2 = cv.xy((b.x, b.y))
            out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
        out.append("</g>")

    out.append(f'<g fill="{style.image_color}">')
    for p in packing.x_images:
        x, y = cv.xy(p)
        out.append(f'<circle cx="{x}" cy="{y}" r="{style.point_radius}"/>')
    out.append("</g>")
    out.append(f'<g fill="{style.tree_color}">')
    for p in packing.node_pos:
        x, y = cv.xy(p)
        out.append(f'<circle cx="{x}" cy="{y}" r="{0.7 * style.point_radius:.2f}"/>')
    out.append("</g>")

    if style.labels:
        off = 1.5 * style.point_radius
        out.append(f'<g font-family="sans-serif" font-size="{style.font_size}">')
        for lab, p in zip(tree.display_labels, packing.node_pos):
            x, y = cv.xy(p)
            out.append(f'<text x="{cv.n(float(x) + off)}" y="{cv.n(float(y) - off)}">{escape(lab)}</text>')
        for j, p in enumerate(packing.x_images):
            x, y = cv.xy(p)
            out.append(f'<text x="{cv.n(float(x) + off)}" y="{cv.n(float(y) - off)}" '
                       f'fill="{style.image_color}">x{j + 1}</text>')
        deg = math.degrees(packing.theta_x)
        out.append(f'<text x="{cv.n(style.margin)}" y="{cv.n(cv.height - 0.4 * style.margin)}">'
                   f"theta_x = {deg:.2f} deg</text>")
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
