"""Planar primitives: exact-sign orientation, segment tests, polygon measures."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

# Shewchuk's static filter for orient2d: if |det| exceeds this times the
# magnitude sum of the two products, the float sign is certain.
_CCW_ERRBOUND = (3.0 + 16.0 * 2.0 ** -53) * 2.0 ** -53


def orient2d(a, b, c) -> int:
    """Sign of the turn a -> b -> c: +1 left (ccw), -1 right, 0 collinear.

    The sign is exact for double inputs: a float filter settles almost all
    calls and the rest are redone in rational arithmetic.
    """
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    if abs(det) > _CCW_ERRBOUND * (abs(detleft) + abs(detright)):
        return 1 if det > 0 else -1
    return _orient_exact(a, b, c)


def _orient_exact(a, b, c) -> int:
    ax, ay, bx, by, cx, cy = (Fraction(float(v)) for v in (a[0], a[1], b[0], b[1], c[0], c[1]))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (det > 0) - (det < 0)


def orient2d_many(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Vectorized :func:`orient2d`; uncertain rows fall back to exact arithmetic."""
    detleft = (a[:, 0] - c[:, 0]) * (b[:, 1] - c[:, 1])
    detright = (a[:, 1] - c[:, 1]) * (b[:, 0] - c[:, 0])
    det = detleft - detright
    sign = np.sign(det).astype(np.int64)
    unsure = np.abs(det) <= _CCW_ERRBOUND * (np.abs(detleft) + np.abs(detright))
    for i in np.flatnonzero(unsure):
        sign[i] = _orient_exact(a[i], b[i], c[i])
    return sign


def _on_segment(p, q, r) -> bool:
    """For collinear p, q, r: does r lie on the closed segment pq?"""
    return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed-segment intersection test, touching included."""
    d1 = orient2d(q1, q2, p1)
    d2 = orient2d(q1, q2, p2)
    d3 = orient2d(p1, p2, q1)
    d4 = orient2d(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return ((d1 == 0 and _on_segment(q1, q2, p1)) or (d2 == 0 and _on_segment(q1, q2, p2))
            or (d3 == 0 and _on_segment(p1, p2, q1)) or (d4 == 0 and _on_segment(p1, p2, q2)))


def polygon_area(pts: np.ndarray) -> float:
    """Signed shoelace area (positive for counter-clockwise)."""
    if len(pts) < 3:
        return 0.0
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Crossing-number test for many points against one polygon."""
    points = np.atleast_2d(points)
    px, py = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    straddle = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (px < xcross)
    return (hits.sum(axis=1) % 2) == 1


def distance_to_polyline(p, poly: np.ndarray, closed: bool = True) -> float:
    a = poly
    b = np.roll(poly, -1, axis=0) if closed else poly[1:]
    if not closed:
        a = poly[:-1]
    ab = b - a
    denom = (ab * ab).sum(axis=1)
    t = np.clip(((p - a) * ab).sum(axis=1) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return float(np.min(np.hypot(*(proj - p).T)))


def clip_halfplane(poly: list, normal, anchor, tags: list | None = None, new_tag=None):
    """Keep the part of ``poly`` where ``dot(normal, p - anchor) <= 0``.

    Sutherland-Hodgman against a single line. ``tags[i]`` labels the edge
    from vertex i to i+1; edges created along the clip line get ``new_tag``.
    Works on non-convex input, where disjoint pieces come back joined by
    zero-width bridges along the line (areas stay correct).
    """
    n = len(poly)
    if n == 0:
        return [], []
    nx, ny = normal
    mx, my = anchor
    side = [nx * (p[0] - mx) + ny * (p[1] - my) for p in poly]
    out, out_tags = [], []
    for i in range(n):
        j = (i + 1) % n
        p, q = poly[i], poly[j]
        sp, sq = side[i], side[j]
        tag = tags[i] if tags is not None else None
        if sp <= 0:
            out.append(p)
            if sq <= 0:
                out_tags.append(tag)
            else:
                t = sp / (sp - sq)
                out_tags.append(tag)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
                out_tags.append(new_tag)
        elif sq <= 0:
            t = sp / (sp - sq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
            out_tags.append(tag)
    return out, out_tags
