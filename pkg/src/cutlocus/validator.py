"""Gluing preconditions, curvature audit and vertex-count prediction for packings.

Every check reads only the geometry (node positions, x-images, triangle
and boundary incidences), never the parameters the packer stored, so a
perturbed packing is judged on what it actually is.

The topological-sphere condition needs no runtime check: a single polygon
whose boundary is zipped shut pairwise at its node vertices always closes
up to a sphere.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import orient2d_many, segments_intersect
from .packer import TWO_PI, Packing

BRUTE_FORCE_SEGMENTS = 3000


@dataclass
class SimplicityResult:
    simple: bool
    crossing: tuple[int, int] | None = None
    method: str = "exact"

    def __bool__(self) -> bool:
        return self.simple


@dataclass
class GlueResult:
    ok: bool
    residuals: dict[int, float]
    worst: float
    tolerance: float

    def __bool__(self) -> bool:
        return self.ok


@dataclass
class AngleResult:
    theta_x: float
    theta_x_ok: bool
    cups_ok: bool
    coverage_ok: bool
    cup_angles: dict[int, float]
    coverage_error: float


@dataclass
class ValidationReport:
    simple_polygon: bool
    crossing: tuple[int, int] | None
    theta_x: float
    theta_x_ok: bool
    theta_x_borderline: bool
    glue_ok: bool
    glue_worst: float
    cups_ok: bool
    coverage_ok: bool
    coverage_error: float
    curvatures: dict[str, float]
    gauss_bonnet_sum: float
    n_leaves: int
    predicted_vertices: int
    notes: list[str] = field(default_factory=list)

    @property
    def agt_ok(self) -> bool:
        """All gluing-theorem preconditions hold (the cup shape is advisory)."""
        return self.simple_polygon and self.glue_ok and self.theta_x_ok and self.coverage_ok

    def to_json_obj(self) -> dict:
        out = asdict(self)
        out["agt_ok"] = self.agt_ok
        return out

    def summary(self) -> str:
        def mark(ok):
            return "PASS" if ok else "FAIL"
        lines = [
            f"simple polygon      {mark(self.simple_polygon)}"
            + (f"  crossing segments {self.crossing}" if self.crossing else ""),
            f"perimeter gluing    {mark(self.glue_ok)}  worst residual {self.glue_worst:.3e}",
            f"angle at x <= 2pi   {mark(self.theta_x_ok)}  theta_x = {math.degrees(self.theta_x):.4f} deg"
            + ("  (borderline)" if self.theta_x_borderline else ""),
            f"2pi at ramification {mark(self.coverage_ok)}  worst error {self.coverage_error:.3e}",
            f"cups V-shaped       {'yes' if self.cups_ok else 'no'}  (advisory)",
            f"Gauss-Bonnet sum    {self.gauss_bonnet_sum / math.pi:.12f} pi",
            f"predicted vertices  {self.predicted_vertices}  (leaves: {self.n_leaves})",
        ]
        return "\n".join(lines + [f"note: {n}" for n in self.notes])


def _length_tol(packing: Packing) -> float:
    return packing.config.eps_len * packing.scale


# --------------------------------------------------------------------------- simplicity

def check_polygon_simple(packing: Packing) -> SimplicityResult:
    """Is the boundary a simple polygon?

    Pairwise exact-predicate tests for desk-sized packings; above
    ``BRUTE_FORCE_SEGMENTS`` the test is delegated to GEOS.
    """
    pts = packing.boundary_points
    if len(pts) > BRUTE_FORCE_SEGMENTS:
        return _simple_geos(pts)
    return polygon_is_simple(pts)


def polygon_is_simple(pts: np.ndarray) -> SimplicityResult:
    """Brute-force simplicity with exact orientation signs.

    Adjacent edges may only share their common vertex (no folding back);
    all other pairs must be disjoint, touching included.
    """
    k = len(pts)
    a = pts
    b = np.roll(pts, -1, axis=0)
    # adjacent pairs (i, i+1): collinear and folding back means overlap
    nxt = np.roll(b, -1, axis=0)
    turn = orient2d_many(a, b, nxt)
    back = ((a - b) * (nxt - b)).sum(axis=1) > 0
    bad = np.flatnonzero((turn == 0) & back)
    if bad.size:
        i = int(bad[0])
        return SimplicityResult(False, (i, (i + 1) % k))
    if np.unique(pts, axis=0).shape[0] < k:
        _, inv, cnt = np.unique(pts, axis=0, return_inverse=True, return_counts=True)
        dup = np.flatnonzero(cnt[inv.ravel()] > 1)
        return SimplicityResult(False, (int(dup[0]), int(dup[1])))
    for i in range(k):
        js = np.arange(i + 2, k)
        if i == 0:
            js = js[js != k - 1]
        if not js.size:
            continue
        p, q = a[i], b[i]
        # cheap bounding-box rejection before the exact tests
        lo, hi = np.minimum(p, q), np.maximum(p, q)
        slo, shi = np.minimum(a[js], b[js]), np.maximum(a[js], b[js])
        cand = js[np.all((shi >= lo) & (slo <= hi), axis=1)]
        if not cand.size:
            continue
        n = cand.size
        P, Qp = np.repeat(p[None], n, 0), np.repeat(q[None], n, 0)
        d1 = orient2d_many(a[cand], b[cand], P)
        d2 = orient2d_many(a[cand], b[cand], Qp)
        d3 = orient2d_many(P, Qp, a[cand])
        d4 = orient2d_many(P, Qp, b[cand])
        maybe = ((d1 * d2 <= 0) & (d3 * d4 <= 0))
        for j in cand[maybe].tolist():
            if segments_intersect(p, q, a[j], b[j]):
                return SimplicityResult(False, (i, j))
    return SimplicityResult(True)


def _simple_geos(pts: np.ndarray) -> SimplicityResult:
    import shapely

    ring = shapely.LinearRing(pts)
    return SimplicityResult(bool(shapely.is_simple(ring)), None, method="geos")


# --------------------------------------------------------------------------- gluing

def check_gluing(packing: Packing) -> GlueResult:
    """The two boundary edges meeting at each node vertex must match in length."""
    pts = packing.boundary_points
    prev_len = np.hypot(*(pts - np.roll(pts, 1, axis=0)).T)
    next_len = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T)
    nodes = np.flatnonzero(packing.boundary[:, 0] == 0)
    res = np.abs(prev_len[nodes] - next_len[nodes])
    tol = _length_tol(packing)
    residuals = dict(zip(packing.boundary[nodes, 1].tolist(), res.tolist()))
    worst = float(res.max()) if res.size else 0.0
    return GlueResult(bool(worst <= tol), residuals, worst, tol)


# --------------------------------------------------------------------------- angles

def _node_angle_sums(packing: Packing) -> np.ndarray:
    ang = packing.corner_angles
    t = packing.triangle_index
    n = len(packing.tree)
    return (np.bincount(t[:, 0], weights=ang[:, 0], minlength=n)
            + np.bincount(t[:, 1], weights=ang[:, 1], minlength=n))


def cup_angles(packing: Packing) -> np.ndarray:
    """External angle at each non-root node left open by its two parent-edge triangles."""
    ang = packing.corner_angles[:, 1]
    return TWO_PI - (ang[0::2] + ang[1::2])


def check_angle_conditions(packing: Packing) -> AngleResult:
    eps = packing.config.eps_ang
    theta = packing.theta_x
    cups = cup_angles(packing)
    sums = _node_angle_sums(packing)
    tree = packing.tree
    internal = np.flatnonzero(~tree.is_leaf)
    if not packing.wrap:
        internal = internal[internal != tree.root]
    err = np.abs(sums[internal] - TWO_PI)
    worst = float(err.max()) if err.size else 0.0
    return AngleResult(
        theta_x=theta,
        theta_x_ok=bool(theta <= TWO_PI + eps),
        cups_ok=bool(np.all(cups < math.pi)),
        coverage_ok=bool(worst <= eps),
        cup_angles=dict(zip(range(1, len(tree)), cups.tolist())),
        coverage_error=worst,
    )


def curvature_report(packing: Packing) -> tuple[dict[str, float], float]:
    """Curvature at the leaves, at the root when it sits on the boundary, and
    at the source x. Ramification points are flat and not listed."""
    sums = _node_angle_sums(packing)
    tree = packing.tree
    labels = tree.display_labels
    curv: dict[str, float] = {}
    for i in np.flatnonzero(tree.is_leaf).tolist():
        curv[labels[i]] = TWO_PI - float(sums[i])
    if not packing.wrap:
        curv[labels[tree.root]] = TWO_PI - float(sums[tree.root])
    curv["x"] = TWO_PI - packing.theta_x
    return curv, math.fsum(curv.values())


# --------------------------------------------------------------------------- aggregate

def predicted_vertices(n_leaves: int, theta_x: float, alpha: float, wrap: bool, eps_ang: float) -> int:
    return n_leaves + int(theta_x < TWO_PI - eps_ang) + int(not wrap and alpha < TWO_PI - eps_ang)


def validate(packing: Packing) -> ValidationReport:
    simple = check_polygon_simple(packing)
    glue = check_gluing(packing)
    angles = check_angle_conditions(packing)
    curv, gb = curvature_report(packing)
    eps = packing.config.eps_ang
    n_leaves = int(packing.tree.is_leaf.sum())
    notes = []
    if simple.method == "geos":
        notes.append("simplicity decided by GEOS (large polygon)")
    if not angles.theta_x_ok:
        notes.append("theta_x exceeds 2pi: the gluing theorem does not apply")
    borderline = abs(angles.theta_x - TWO_PI) <= eps
    return ValidationReport(
        simple_polygon=simple.simple, crossing=simple.crossing,
        theta_x=angles.theta_x, theta_x_ok=angles.theta_x_ok, theta_x_borderline=borderline,
        glue_ok=glue.ok, glue_worst=glue.worst,
        cups_ok=angles.cups_ok, coverage_ok=angles.coverage_ok,
        coverage_error=angles.coverage_error,
        curvatures=curv, gauss_bonnet_sum=gb, n_leaves=n_leaves,
        predicted_vertices=predicted_vertices(n_leaves, angles.theta_x,
                                              float(packing.config.alpha), packing.wrap, eps),
        notes=notes,
    )
