"""Independent reference computations used by the tests.

Nothing here calls into the packer or the ridge extractor: the reference
construction is a plain recursive walk in complex arithmetic, boundary
order comes from a tree traversal, and the cut-locus check rasterizes the
nearest-image map.
"""
from __future__ import annotations

import cmath
import math

import numpy as np
import shapely
from scipy.spatial import cKDTree

TWO_PI = 2 * math.pi


def _kids(parent):
    out = [[] for _ in parent]
    for i, p in enumerate(parent):
        if p >= 0:
            out[p].append(i)
    return out


def reference_packing(parent, weight, alpha, lam, root_direction=0.0):
    """Equiangular triangle packing computed node by node.

    Returns (node positions, polygon vertices in order) as complex numbers.
    """
    kids = _kids(list(parent))
    pos = {0: 0j}
    images = {}  # node -> list of its k+1 image points

    def star(q, apex, direction, a, r):
        k = len(kids[q])
        start = direction - a / 2
        pts = [apex + r * cmath.exp(1j * (start + a * j / k)) for j in range(k + 1)]
        images[q] = pts
        for j, c in enumerate(kids[q]):
            pos[c] = apex + weight[c] * cmath.exp(1j * (start + a * (j + 0.5) / k))
            if kids[c]:
                left = pts[j]
                to_parent, to_left = apex - pos[c], left - pos[c]
                phi = abs(cmath.phase(to_left / to_parent))
                star(c, pos[c], cmath.phase(pos[c] - apex), TWO_PI - 2 * phi, abs(to_left))

    star(0, 0j, root_direction, alpha, lam)

    def walk(q):
        out = [images[q][0]]
        for j, c in enumerate(kids[q]):
            out += [pos[c]] if not kids[c] else walk(c)[1:-1]
            out.append(images[q][j + 1])
        return out

    ring = walk(0)
    wrap = alpha >= TWO_PI - 1e-12
    ring = ring[:-1] if wrap else [0j] + ring
    return pos, ring


def turning_number_ccw(pts) -> bool:
    z = np.asarray(pts)
    return 0.5 * np.sum(z[:, 0] * np.roll(z[:, 1], -1) - z[:, 1] * np.roll(z[:, 0], -1)) > 0


# --------------------------------------------------------------------------- ordered trees

def _nested(parent, weight, reflect=False):
    kids = _kids(list(parent))

    def rec(v):
        ks = kids[v][::-1] if reflect else kids[v]
        return tuple((round(float(weight[c]), 9), rec(c)) for c in ks)
    return rec(0)


def same_ordered_tree(t1, t2, allow_reflection=True) -> bool:
    """Brute force: do two rooted trees agree up to a rotation of the root
    order (and optionally a global mirror image)?"""
    a = _nested(t1.parent, t1.weight)
    for reflect in (False, True) if allow_reflection else (False,):
        b = _nested(t2.parent, t2.weight, reflect)
        if len(a) == len(b) and any(b[r:] + b[:r] == a for r in range(max(len(b), 1))):
            return True
    return False


# --------------------------------------------------------------------------- raster oracle

def raster_cut_locus(packing, res=512):
    """Check the tree against a pixel picture of the nearest-image map.

    Every pixel pair with different nearest images must sit near a tree
    edge, and every tree edge sample must sit near such a pair. Returns the
    two worst distances in pixel units.
    """
    poly = packing.boundary_points
    sites = packing.x_images
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    h = float(max(hi - lo)) / res
    xs = np.arange(lo[0], hi[0] + h, h)
    ys = np.arange(lo[1], hi[1] + h, h)
    gx, gy = np.meshgrid(xs, ys)
    shape = shapely.Polygon(poly)
    inside = shapely.contains_xy(shape, gx, gy)
    _, label = cKDTree(sites).query(np.column_stack((gx.ravel(), gy.ravel())))
    label = label.reshape(gx.shape)
    # merge coincident images (the wrap point) before comparing labels
    _, canon = np.unique(np.round(sites / (1e-9 * max(1.0, float(np.abs(sites).max())))),
                         axis=0, return_inverse=True)
    label = canon.ravel()[label]
    edge_pts = []
    for dy, dx in ((0, 1), (1, 0)):
        a_in = inside[: inside.shape[0] - dy, : inside.shape[1] - dx]
        b_in = inside[dy:, dx:]
        diff = label[: label.shape[0] - dy, : label.shape[1] - dx] != label[dy:, dx:]
        iy, ix = np.nonzero(a_in & b_in & diff)
        p = np.column_stack((xs[ix], ys[iy]))
        q = p + (dx * h, dy * h)
        # a pixel pair straddling a thin slit of the exterior is not a ridge crossing
        segs = shapely.linestrings(np.stack((p, q), axis=1))
        keep = ~shapely.intersects(segs, shape.exterior)
        edge_pts.append(0.5 * (p + q)[keep])
    edge_pts = np.vstack(edge_pts)

    tree = packing.tree
    pos = packing.node_pos
    a = pos[tree.parent[1:]]
    b = pos[1:]
    # distance from each ridge pixel to the nearest tree segment
    ab = b - a
    best = np.full(len(edge_pts), np.inf)
    for s in range(len(a)):
        t = np.clip(((edge_pts - a[s]) @ ab[s]) / (ab[s] @ ab[s]), 0, 1)
        d = np.hypot(*(edge_pts - (a[s] + t[:, None] * ab[s])).T)
        best = np.minimum(best, d)
    far_pixel = float(best.max() / h) if len(best) else 0.0
    # tree samples that are well inside the polygon must see a label change nearby
    t = np.linspace(0.05, 0.95, 20)
    samples = (a[:, None, :] * (1 - t)[None, :, None] + b[:, None, :] * t[None, :, None]).reshape(-1, 2)
    margin = shapely.distance(shape.exterior, shapely.points(samples))
    samples = samples[margin > 3 * h]
    far_tree = float(cKDTree(edge_pts).query(samples)[0].max() / h) if len(samples) else 0.0
    return far_pixel, far_tree
