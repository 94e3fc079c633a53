"""Independent verification of a packing through its restricted Voronoi diagram.

The Voronoi diagram of the x-images, cut down to the packing polygon, must
reproduce the input tree edge for edge. Two routes are offered: a full
extraction (cells by half-plane clipping, shared boundaries collected into
a ridge graph and matched against the tree as an ordered weighted tree), and
a cheap sampling oracle that checks equidistance along the placed tree edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import clip_halfplane, distance_to_polyline, points_in_polygon
from .packer import TWO_PI, Packing
from .tree import LengthTree

EPS_MATCH = 1e-6
MERGE_FACTOR = 1e-7

RAMIFICATION = "ramification"
BOUNDARY_LEAF = "boundary-leaf"
BOUNDARY_ROOT = "boundary-root"
BOUNDARY_OTHER = "boundary-other"
INTERIOR_OTHER = "interior-other"


class RidgeExtractionError(RuntimeError):
    pass


@dataclass
class RidgeVertex:
    x: float
    y: float
    kind: str
    node: int | None = None        # tree node sitting at this polygon vertex, if any
    start_angle: float | None = None  # boundary vertices: direction of the next polygon vertex


@dataclass
class RidgeEdge:
    a: int
    b: int
    length: float
    sites: tuple[int, int]


@dataclass
class RidgeGraph:
    vertices: list[RidgeVertex]
    edges: list[RidgeEdge]
    embedding: list[list[int]]   # neighbor vertices, counter-clockwise
    scale: float = 1.0           # length scale the merge tolerance was derived from

    def edge_length(self, a: int, b: int) -> float:
        return self._lengths[(min(a, b), max(a, b))]

    @property
    def _lengths(self) -> dict[tuple[int, int], float]:
        return {(min(e.a, e.b), max(e.a, e.b)): e.length for e in self.edges}

    def to_json_obj(self) -> dict:
        return {
            "vertices": [{"x": v.x, "y": v.y, "kind": v.kind, "node": v.node} for v in self.vertices],
            "edges": [{"a": e.a, "b": e.b, "length": e.length, "sites": list(e.sites)}
                      for e in self.edges],
            "embedding": self.embedding,
        }


@dataclass
class MatchReport:
    isomorphic: bool
    max_length_error: float
    node_correspondence: dict[int, int] = field(default_factory=dict)
    orientation: str | None = None
    max_position_error: float | None = None
    reason: str = ""

    def to_json_obj(self) -> dict:
        return {"isomorphic": self.isomorphic, "max_length_error": self.max_length_error,
                "node_correspondence": {str(k): v for k, v in self.node_correspondence.items()},
                "orientation": self.orientation, "max_position_error": self.max_position_error,
                "reason": self.reason}


@dataclass
class OracleResult:
    ok: bool
    worst_residual: float
    tolerance: float
    worst_edge: int | None
    max_length_error: float = 0.0

    def to_json_obj(self) -> dict:
        return {"ok": self.ok, "worst_residual": self.worst_residual,
                "tolerance": self.tolerance, "worst_edge": self.worst_edge,
                "max_length_error": self.max_length_error}


# --------------------------------------------------------------------------- cells

def _bisector(si, sj):
    normal = (sj[0] - si[0], sj[1] - si[1])
    mid = (0.5 * (si[0] + sj[0]), 0.5 * (si[1] + sj[1]))
    return normal, mid


def voronoi_cell(site_index: int, sites, polygon) -> np.ndarray:
    """Part of ``polygon`` closer to ``sites[site_index]`` than to any other site.

    Successive half-plane clipping of the (possibly non-convex) polygon. If
    the region falls apart, pieces are joined by zero-width bridges; area
    and point-in-region parity are unaffected.
    """
    sites = np.asarray(sites, dtype=float)
    si = sites[site_index]
    others = np.delete(np.arange(len(sites)), site_index)
    if np.any(np.all(sites[others] == si, axis=1)):
        raise ValueError("coincident sites")
    poly = [tuple(p) for p in np.asarray(polygon, dtype=float)]
    for j in others[np.argsort(np.hypot(*(sites[others] - si).T))]:
        normal, mid = _bisector(si, sites[j])
        poly, _ = clip_halfplane(poly, normal, mid)
        if not poly:
            break
    return np.asarray(poly, dtype=float).reshape(-1, 2)


def _convex_cells(sites: np.ndarray, box: np.ndarray):
    """Unrestricted Voronoi cells inside a bounding box, edges tagged by neighbor site."""
    cells = []
    for i, si in enumerate(sites):
        poly = [tuple(p) for p in box]
        tags = [-1] * len(poly)
        d = np.hypot(*(sites - si).T)
        for j in np.argsort(d).tolist():
            if j == i:
                continue
            normal, mid = _bisector(si, sites[j])
            poly, tags = clip_halfplane(poly, normal, mid, tags, j)
            if not poly:
                break
        cells.append((poly, tags))
    return cells


def _inside_pieces(p: np.ndarray, q: np.ndarray, poly: np.ndarray, tiny: float):
    """Sub-segments of pq lying inside the polygon."""
    d = q - p
    a = poly
    e = np.roll(poly, -1, axis=0) - a
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    w = a - p
    ok = np.abs(denom) > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / denom
        u = (w[:, 0] * d[1] - w[:, 1] * d[0]) / denom
    hit = ok & (u >= -1e-12) & (u <= 1 + 1e-12) & (t > 0) & (t < 1)
    ts = np.unique(np.concatenate(([0.0, 1.0], t[hit])))
    length = math.hypot(*d)
    mids = []
    spans = []
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if (t1 - t0) * length <= tiny:
            continue
        spans.append((t0, t1))
        mids.append(p + 0.5 * (t0 + t1) * d)
    if not spans:
        return []
    inside = points_in_polygon(np.asarray(mids), poly)
    pieces = []
    for (t0, t1), keep in zip(spans, inside):
        if not keep:
            continue
        if pieces and abs(pieces[-1][1] - t0) * length <= tiny:
            pieces[-1] = (pieces[-1][0], t1)
        else:
            pieces.append((t0, t1))
    return [(p + t0 * d, p + t1 * d) for t0, t1 in pieces]


# --------------------------------------------------------------------------- extraction

def _refine_positions(pos, alive, adj, on_boundary, sites, poly, eps_merge) -> None:
    """Recompute merged vertices from their defining sites.

    Clipped endpoints carry rounding from every half-plane they passed
    through; solving directly (equidistance for interior vertices, bisector
    meets edge on the boundary) brings them back to a few ulps of the scale.
    """
    nb = len(poly)
    for v in alive:
        pairs = set(adj[v].values())
        if on_boundary[v]:
            d = np.hypot(*(poly - pos[v]).T)
            k = int(np.argmin(d))
            if d[k] <= eps_merge:
                pos[v] = poly[k]
                continue
            if len(pairs) != 1:
                continue
            i, j = next(iter(pairs))
            a, b = poly, np.roll(poly, -1, axis=0)
            ab = b - a
            t = np.clip(((pos[v] - a) * ab).sum(axis=1) / (ab * ab).sum(axis=1), 0.0, 1.0)
            e = int(np.argmin(np.hypot(*(a + t[:, None] * ab - pos[v]).T)))
            # bisector of (si, sj): (sj - si) . (p - mid) = 0 with p = a + t (b - a)
            si, sj = sites[i], sites[j]
            n = sj - si
            denom = float(n @ ab[e])
            if denom != 0.0:
                t = float(n @ (0.5 * (si + sj) - a[e])) / denom
                if -1e-9 <= t <= 1 + 1e-9:
                    pos[v] = a[e] + t * ab[e]
            continue
        ids = sorted({s for pair in pairs for s in pair})
        if len(ids) < 3:
            continue
        s0 = sites[ids[0]]
        rel = sites[ids[1:]] - s0
        sol, *_ = np.linalg.lstsq(2.0 * rel, (rel * rel).sum(axis=1), rcond=None)
        pos[v] = s0 + sol


def extract_ridge(packing: Packing, eps_merge: float | None = None) -> RidgeGraph:
    """Restricted Voronoi diagram of the x-images as an embedded tree."""
    sites = np.asarray(packing.x_images, dtype=float)
    poly = packing.boundary_points
    if eps_merge is None:
        eps_merge = MERGE_FACTOR * packing.scale
    if len(sites) < 2:
        raise RidgeExtractionError("need at least two x-images")
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    pad = max(hi - lo) + 1.0
    box = np.array([[lo[0] - pad, lo[1] - pad], [hi[0] + pad, lo[1] - pad],
                    [hi[0] + pad, hi[1] + pad], [lo[0] - pad, hi[1] + pad]])

    raw = []
    for i, (cell, tags) in enumerate(_convex_cells(sites, box)):
        n = len(cell)
        for k in range(n):
            j = tags[k]
            if j is None or j <= i:
                continue
            p, q = np.asarray(cell[k]), np.asarray(cell[(k + 1) % n])
            for a, b in _inside_pieces(p, q, poly, 0.1 * eps_merge):
                raw.append((a, b, (i, j)))
    if not raw:
        raise RidgeExtractionError("no Voronoi edge lies inside the polygon")

    # coalesce endpoints
    ends = np.array([pt for a, b, _ in raw for pt in (a, b)])
    parent = list(range(len(ends)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in cKDTree(ends).query_pairs(eps_merge):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    roots = [find(i) for i in range(len(ends))]
    ids: dict[int, int] = {}
    for r in roots:
        ids.setdefault(r, len(ids))
    cluster = np.array([ids[r] for r in roots])
    nv = len(ids)
    pos = np.zeros((nv, 2))
    np.add.at(pos, cluster, ends)
    pos /= np.bincount(cluster, minlength=nv)[:, None]

    adj: dict[int, dict[int, tuple[int, int]]] = {v: {} for v in range(nv)}
    for e, (_, _, pair) in enumerate(raw):
        a, b = int(cluster[2 * e]), int(cluster[2 * e + 1])
        if a != b and b not in adj[a]:
            adj[a][b] = pair
            adj[b][a] = pair

    # smooth interior degree-2 vertices splitting one bisector edge
    on_boundary = [distance_to_polyline(pos[v], poly) <= eps_merge for v in range(nv)]
    for v in range(nv):
        if len(adj[v]) == 2 and not on_boundary[v]:
            (a, pa), (b, pb) = adj[v].items()
            if pa == pb and b not in adj[a]:
                del adj[a][v], adj[b][v]
                adj[a][b] = adj[b][a] = pa
                adj[v] = {}
    alive = [v for v in range(nv) if adj[v]]
    renum = {v: k for k, v in enumerate(alive)}
    _refine_positions(pos, alive, adj, on_boundary, sites, poly, eps_merge)

    node_at = {}
    bpts = poly
    for k, (kind, idx) in enumerate(packing.boundary.tolist()):
        if kind == 0:
            node_at[k] = idx
    tree_root = packing.tree.root

    vertices: list[RidgeVertex] = []
    for v in alive:
        x, y = pos[v]
        deg = len(adj[v])
        if on_boundary[v]:
            dist = np.hypot(*(bpts - pos[v]).T)
            k = int(np.argmin(dist))
            node = node_at.get(k) if dist[k] <= eps_merge else None
            if node is None:
                kind = BOUNDARY_OTHER
                start = None
            else:
                kind = BOUNDARY_ROOT if node == tree_root else BOUNDARY_LEAF
                nxt = bpts[(k + 1) % len(bpts)]
                start = math.atan2(nxt[1] - y, nxt[0] - x)
            vertices.append(RidgeVertex(float(x), float(y), kind, node, start))
        else:
            kind = RAMIFICATION if deg >= 3 else INTERIOR_OTHER
            vertices.append(RidgeVertex(float(x), float(y), kind))

    edges = []
    for v in alive:
        for u, pair in adj[v].items():
            if v < u:
                edges.append(RidgeEdge(renum[v], renum[u], float(np.hypot(*(pos[u] - pos[v]))), pair))
    _check_tree(len(vertices), edges)

    embedding = []
    for v in alive:
        nb = list(adj[v])
        ang = [math.atan2(pos[u][1] - pos[v][1], pos[u][0] - pos[v][0]) for u in nb]
        embedding.append([renum[u] for _, u in sorted(zip(ang, nb))])
    return RidgeGraph(vertices, edges, embedding, packing.scale)


def _check_tree(nv: int, edges: list[RidgeEdge]) -> None:
    if len(edges) != nv - 1:
        raise RidgeExtractionError(f"ridge graph has {nv} vertices and {len(edges)} edges; "
                                   "not a tree")
    adj = [[] for _ in range(nv)]
    for e in edges:
        adj[e.a].append(e.b)
        adj[e.b].append(e.a)
    seen = {0}
    stack = [0]
    while stack:
        for u in adj[stack.pop()]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    if len(seen) != nv:
        raise RidgeExtractionError("ridge graph is disconnected")


# --------------------------------------------------------------------------- matching

def _ordered_from(ridge: RidgeGraph, v: int, came_from: int | None, mirror: bool) -> list[int]:
    emb = ridge.embedding[v]
    if came_from is not None:
        k = emb.index(came_from)
        order = emb[k + 1:] + emb[:k]
    else:
        vert = ridge.vertices[v]
        order = list(emb)
        if vert.start_angle is not None:
            def rel(u):
                w = ridge.vertices[u]
                a = math.atan2(w.y - vert.y, w.x - vert.x) - vert.start_angle
                return a % TWO_PI
            order.sort(key=rel)
    return order[::-1] if mirror else order


def _expected_kind(tree: LengthTree, t: int, root_on_boundary: bool) -> tuple[str, ...]:
    if t == tree.root:
        return (BOUNDARY_ROOT,) if root_on_boundary else (RAMIFICATION,)
    return (BOUNDARY_LEAF,) if tree.is_leaf[t] else (RAMIFICATION,)


def _try_match(ridge, tree, kids, lengths, r, mirror, rot, root_on_boundary):
    weight = tree.weight
    corr = {r: tree.root}
    worst = 0.0
    root_order = _ordered_from(ridge, r, None, mirror)
    root_order = root_order[rot:] + root_order[:rot]
    stack = [(r, None, tree.root, root_order)]
    while stack:
        v, pv, t, order = stack.pop()
        if ridge.vertices[v].kind not in _expected_kind(tree, t, root_on_boundary):
            return None
        if order is None:
            order = _ordered_from(ridge, v, pv, mirror)
        tk = kids[t]
        if len(order) != len(tk):
            return None
        for u, c in zip(order, tk):
            length = lengths[(min(u, v), max(u, v))]
            worst = max(worst, abs(length - weight[c]) / weight[c])
            corr[u] = c
            stack.append((u, v, c, None))
    return worst, corr


def match_tree(ridge: RidgeGraph, tree: LengthTree, node_pos: np.ndarray | None = None,
               eps_match: float = EPS_MATCH, eps_pos: float | None = None) -> MatchReport:
    """Compare the ridge with the tree as ordered weighted trees.

    Rotation of the root's cyclic order is allowed when the root is interior,
    and a global reflection is allowed everywhere. If ``node_pos`` is given,
    matched ridge vertices must also sit on the packer's node positions.
    """
    if len(ridge.vertices) != len(tree):
        return MatchReport(False, math.inf,
                           reason=f"ridge has {len(ridge.vertices)} vertices, tree has {len(tree)} nodes")
    lengths = ridge._lengths
    boundary_roots = [i for i, v in enumerate(ridge.vertices) if v.kind == BOUNDARY_ROOT]
    root_deg = len(tree.children(tree.root))
    if boundary_roots:
        candidates = boundary_roots
    else:
        candidates = [i for i, v in enumerate(ridge.vertices)
                      if v.kind == RAMIFICATION and len(ridge.embedding[i]) == root_deg]
    root_on_boundary = bool(boundary_roots)
    kids = [tree.children(i) for i in range(len(tree))]
    best = None
    for r in candidates:
        rots = [0] if root_on_boundary else range(len(ridge.embedding[r]))
        for mirror in (False, True):
            for rot in rots:
                res = _try_match(ridge, tree, kids, lengths, r, mirror, rot, root_on_boundary)
                if res is not None and (best is None or res[0] < best[0]):
                    best = (res[0], res[1], mirror)
    if best is None:
        return MatchReport(False, math.inf, reason="no structural correspondence")
    worst, corr, mirror = best
    report = MatchReport(bool(worst <= eps_match), float(worst), corr, "mirrored" if mirror else "ccw")
    if not report.isomorphic:
        report.reason = f"edge lengths differ by up to {worst:.3e} (relative)"
    if node_pos is not None:
        rv = np.array([[ridge.vertices[v].x, ridge.vertices[v].y] for v in corr])
        tp = np.asarray(node_pos)[list(corr.values())]
        err = float(np.max(np.hypot(*(rv - tp).T)))
        report.max_position_error = err
        tol = eps_pos if eps_pos is not None else MERGE_FACTOR * ridge.scale
        if err > tol:
            report.isomorphic = False
            report.reason = f"ridge vertices sit up to {err:.3e} away from the placed nodes"
    return report


# --------------------------------------------------------------------------- sampling oracle

def bisector_oracle(packing: Packing, samples_per_edge: int = 16,
                    eps_match: float = EPS_MATCH) -> OracleResult:
    """Every sampled point of every tree edge must be equidistant from the two
    images flanking the edge, and no other image may be closer.

    The drawn edges must also have the tree's lengths (relative ``eps_match``),
    so the check ties the Voronoi structure back to the tree itself.

    Equidistance is checked at the samples. Being at least as close to a
    flanking image as to some other image is a half-plane condition, so it
    holds along a whole edge once it holds at both endpoints; the nearest
    image is therefore only looked up at the nodes.
    """
    tree = packing.tree
    pos = np.asarray(packing.node_pos, dtype=float)
    sites = np.asarray(packing.x_images, dtype=float)
    tri = packing.triangle_index
    child = tri[0::2, 1]
    par = tri[0::2, 0]
    sa, sb = sites[tri[0::2, 2]], sites[tri[1::2, 2]]
    t = np.linspace(0.0, 1.0, max(samples_per_edge, 2))
    P = pos[par][:, None, :] * (1 - t)[None, :, None] + pos[child][:, None, :] * t[None, :, None]
    da = np.hypot(*(P - sa[:, None, :]).transpose(2, 0, 1))
    db = np.hypot(*(P - sb[:, None, :]).transpose(2, 0, 1))
    nearest, _ = cKDTree(sites).query(pos)
    far = np.maximum(da, db)[:, [0, -1]]
    closer = np.maximum(far - nearest[np.column_stack((par, child))], 0.0)
    per_edge = np.maximum(np.abs(da - db).max(axis=1), closer.max(axis=1))
    tol = packing.config.eps_len * packing.scale
    w = tree.weight[child]
    len_err = np.abs(np.hypot(*(pos[child] - pos[par]).T) - w) / w
    bad = (per_edge > tol) | (len_err > eps_match)
    ok = not bad.any()
    k = int(np.argmax(bad)) if not ok else int(np.argmax(per_edge))
    return OracleResult(ok, float(per_edge.max()), tol, None if ok else int(child[k]),
                        float(len_err.max()))
