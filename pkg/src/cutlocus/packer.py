"""Triangle packings: planar star unfoldings that realize a length tree.

The root star is placed inside a cone of apex angle ``alpha``; every
internal child then fills its V-shaped cup with a star of its own,
level by level. Points never move once placed. Each level is processed as
one vectorized batch, so the whole build is linear in the tree size.
"""
from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .tree import LengthTree, stats

TWO_PI = 2.0 * math.pi
EPS_LEN = float(os.environ.get("CUTLOCUS_EPS_LEN", "1e-9"))
EPS_ANG = float(os.environ.get("CUTLOCUS_EPS_ANG", "1e-9"))
MIN_RANDOM_GAP = 1e-3
DISTRIBUTIONS = ("equiangular", "random", "explicit")


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class BuildConfig:
    """Free parameters of the construction.

    ``lambda_value`` of None means the sufficient bound from
    :func:`lambda_min`. ``directions`` maps a node label (or id) to the
    interior x-image directions of its star as strictly increasing
    fractions of the node's cone, one fewer than its child count.
    """

    alpha: float = TWO_PI
    lambda_value: float | None = None
    distribution: str = "equiangular"
    seed: int = 0
    directions: Mapping[str | int, Sequence[float]] | None = None
    root_direction: float = 0.0
    eps_len: float = field(default=EPS_LEN)
    eps_ang: float = field(default=EPS_ANG)

    def __post_init__(self):
        if not (0.0 < self.alpha <= TWO_PI + self.eps_ang):
            raise ValueError(f"alpha must lie in (0, 2*pi], got {self.alpha}")
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if self.lambda_value is not None and not (math.isfinite(self.lambda_value)
                                                  and self.lambda_value > 0):
            raise ValueError("lambda must be a positive finite length")
        if self.distribution == "explicit" and self.directions is None:
            raise ValueError("explicit distribution needs a directions mapping")
        for key, fr in (self.directions or {}).items():
            prev = 0.0
            for f in list(fr) + [1.0]:
                if not f > prev:
                    raise ValueError(f"directions for {key!r} must increase strictly inside (0, 1)")
                prev = f

    @property
    def wrap(self) -> bool:
        return self.alpha >= TWO_PI - self.eps_ang

    @property
    def lambda_policy(self) -> str:
        return "auto" if self.lambda_value is None else "explicit"

    def to_json_obj(self) -> dict:
        out = {"alpha": self.alpha, "lambda": self.lambda_value, "distribution": self.distribution,
               "seed": self.seed, "root_direction": self.root_direction,
               "eps_len": self.eps_len, "eps_ang": self.eps_ang}
        if self.directions is not None:
            out["directions"] = {str(k): list(v) for k, v in self.directions.items()}
        return out

    @classmethod
    def from_json_obj(cls, obj: dict) -> "BuildConfig":
        return cls(alpha=obj["alpha"], lambda_value=obj.get("lambda"),
                   distribution=obj.get("distribution", "equiangular"), seed=obj.get("seed", 0),
                   directions=obj.get("directions"), root_direction=obj.get("root_direction", 0.0),
                   eps_len=obj.get("eps_len", EPS_LEN), eps_ang=obj.get("eps_ang", EPS_ANG))


class LambdaBound(NamedTuple):
    m: int
    L: float
    ell: float
    D: float | None
    lambda_min: float

    @property
    def note(self) -> str:
        if self.D is None:
            return "single edge: any lambda > L works"
        return f"rounded up: {math.ceil(self.lambda_min - 1e-12)}"


def lambda_min(tree: LengthTree, eps_len: float = EPS_LEN) -> LambdaBound:
    """Root radius that guarantees at most 2*pi total angle at the source.

    Uses L * (1 + cot(pi / m)) with m the edge count and L the longest
    root-to-leaf path. For a single edge any radius above L suffices.
    """
    st = stats(tree)
    if st.m == 1:
        return LambdaBound(1, st.L, st.ell, None, st.L * (1.0 + eps_len))
    D = st.L / math.tan(math.pi / st.m)
    if st.m == 2:
        D = 0.0  # cot(pi/2) is exactly zero
    return LambdaBound(st.m, st.L, st.ell, D, st.L + D)


class FundamentalTriangle(NamedTuple):
    base_parent: int
    base_child: int
    apex_image: int
    corners: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]


@dataclass(frozen=True, eq=False)
class Packing:
    """A complete triangle packing.

    ``boundary`` rows are ``(kind, index)`` with kind 0 for a tree node and
    1 for an x-image, in counter-clockwise polygon order. ``triangle_index``
    rows are ``(parent, child, image)``, two per tree edge. When ``wrap`` is
    set the first and last x-image of the root are the same stored point and
    the root lies inside the polygon.
    """

    tree: LengthTree
    config: BuildConfig
    node_pos: np.ndarray
    x_images: np.ndarray
    wrap: bool
    boundary: np.ndarray
    triangle_index: np.ndarray
    per_node_lambda: np.ndarray
    per_node_alpha: np.ndarray
    per_node_direction: np.ndarray

    @cached_property
    def triangles(self) -> tuple[FundamentalTriangle, ...]:
        out = []
        for p, c, a in self.triangle_index.tolist():
            corners = (tuple(self.node_pos[p]), tuple(self.node_pos[c]), tuple(self.x_images[a]))
            out.append(FundamentalTriangle(p, c, a, corners))
        return tuple(out)

    @cached_property
    def boundary_points(self) -> np.ndarray:
        kind, idx = self.boundary[:, 0], self.boundary[:, 1]
        pts = np.empty((len(kind), 2))
        pts[kind == 0] = self.node_pos[idx[kind == 0]]
        pts[kind == 1] = self.x_images[idx[kind == 1]]
        return pts

    @cached_property
    def corner_angles(self) -> np.ndarray:
        """Angles of every triangle at (parent, child, image), shape (2m, 3)."""
        t = self.triangle_index
        return _triangle_angles(self.node_pos[t[:, 0]], self.node_pos[t[:, 1]], self.x_images[t[:, 2]])

    @property
    def tip_angles(self) -> np.ndarray:
        return self.corner_angles[:, 2]

    @property
    def theta_x(self) -> float:
        return float(self.tip_angles.sum())

    def theta_x_by_image(self) -> np.ndarray:
        return np.bincount(self.triangle_index[:, 2], weights=self.tip_angles,
                           minlength=len(self.x_images))

    @property
    def scale(self) -> float:
        """Length scale used for relative tolerances."""
        return float(max(1.0, self.per_node_lambda[0]))

    def with_geometry(self, node_pos: np.ndarray | None = None,
                      x_images: np.ndarray | None = None,
                      tree: LengthTree | None = None) -> "Packing":
        """Copy with replaced coordinates or tree (used to build negative controls)."""
        return replace(self,
                       node_pos=self.node_pos if node_pos is None else np.asarray(node_pos, float),
                       x_images=self.x_images if x_images is None else np.asarray(x_images, float),
                       tree=self.tree if tree is None else tree)


def _triangle_angles(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    def at(p, q, r):
        u, v = q - p, r - p
        cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        dot = (u * v).sum(axis=1)
        return np.arctan2(cross, dot)
    return np.column_stack((at(a, b, c), at(b, c, a), at(c, a, b)))


# --------------------------------------------------------------------------- star placement

class StarPlacement(NamedTuple):
    x_images: np.ndarray        # (k+1, 2); first and last coincide for a full cone
    children: np.ndarray        # (k, 2)
    triangles: list[tuple[int, int]]  # (child slot, image slot), two per child


def _equiangular(k: int) -> np.ndarray:
    return np.arange(k + 1) / k


def _random_fractions(k: int, rng: random.Random) -> np.ndarray:
    while True:
        inner = sorted(rng.random() for _ in range(k - 1))
        fr = [0.0] + inner + [1.0]
        if all(b - a >= MIN_RANDOM_GAP for a, b in zip(fr, fr[1:])):
            return np.asarray(fr)


def _star_batch(apex, direction, alpha, lam, counts, fracs, weights):
    """Place a batch of stars at once.

    ``fracs`` holds, per node, its k+1 image fractions (0 first, 1 last);
    ``weights`` its k child weights. Returns image points, child points and,
    per child, the position of its left image inside ``fracs``.
    """
    counts = np.asarray(counts)
    nq = counts.size
    start = direction - 0.5 * alpha
    owner_x = np.repeat(np.arange(nq), counts + 1)
    ang_x = start[owner_x] + fracs * alpha[owner_x]
    pts_x = apex[owner_x] + lam[owner_x, None] * np.column_stack((np.cos(ang_x), np.sin(ang_x)))
    xoff = np.cumsum(counts + 1) - (counts + 1)
    owner_c = np.repeat(np.arange(nq), counts)
    j = np.arange(owner_c.size) - np.repeat(np.cumsum(counts) - counts, counts)
    left = xoff[owner_c] + j
    ang_c = start[owner_c] + 0.5 * (fracs[left] + fracs[left + 1]) * alpha[owner_c]
    pts_c = apex[owner_c] + weights[:, None] * np.column_stack((np.cos(ang_c), np.sin(ang_c)))
    return pts_x, pts_c, left, owner_c, j


def _cup_batch(parent_pos, child_pos, left_image):
    """Cup parameters (alpha, lambda, direction) for placed children."""
    v1 = parent_pos - child_pos
    v2 = left_image - child_pos
    cross = np.abs(v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
    phi = np.arctan2(cross, (v1 * v2).sum(axis=1))
    lam = np.hypot(v2[:, 0], v2[:, 1])
    d = child_pos - parent_pos
    return TWO_PI - 2.0 * phi, lam, np.arctan2(d[:, 1], d[:, 0])


def place_star(apex: Sequence[float], direction: float, alpha_q: float, lambda_q: float,
               child_weights: Sequence[float], distribution: str = "equiangular",
               fractions: Sequence[float] | None = None, seed: int = 0,
               eps_len: float = EPS_LEN) -> StarPlacement:
    """Place one star: k+1 images on a radius-``lambda_q`` arc spanning
    ``alpha_q`` around ``direction`` and k children on the sector bisectors."""
    k = len(child_weights)
    if k < 1:
        raise ValueError("a star needs at least one child")
    if not 0 < alpha_q <= TWO_PI + EPS_ANG:
        raise ValueError("alpha_q must lie in (0, 2*pi]")
    w = np.asarray(child_weights, dtype=float)
    if np.any(w > lambda_q * (1 + eps_len)):
        raise ConstructionError("lambda not sufficiently large at node: "
                                f"child weight {w.max()} exceeds lambda {lambda_q}")
    if fractions is not None:
        fr = np.asarray([0.0, *fractions, 1.0])
        if fr.size != k + 1 or np.any(np.diff(fr) <= 0):
            raise ValueError("fractions must be k-1 strictly increasing values in (0, 1)")
    elif distribution == "random":
        fr = _random_fractions(k, random.Random(seed))
    else:
        fr = _equiangular(k)
    pts_x, pts_c, left, _, j = _star_batch(np.asarray([apex], float), np.array([direction]),
                                           np.array([alpha_q]), np.array([lambda_q]),
                                           [k], fr, w)
    if alpha_q >= TWO_PI - EPS_ANG:
        pts_x[-1] = pts_x[0]
    tris = [(int(i), int(left[i])) for i in range(k)] + [(int(i), int(left[i]) + 1) for i in range(k)]
    tris.sort()
    return StarPlacement(pts_x, pts_c, tris)


def cup_params(packing: Packing, child: int) -> tuple[float, float, float]:
    """(alpha, lambda, direction) of the cup at an already placed child."""
    if child == packing.tree.root:
        raise ValueError("the root has no cup")
    p = int(packing.tree.parent[child])
    left = packing.triangle_index[2 * (child - 1), 2]
    a, lam, d = _cup_batch(packing.node_pos[[p]], packing.node_pos[[child]],
                           packing.x_images[[left]])
    if a[0] <= 0:
        raise ConstructionError(f"degenerate cup at node {child}")
    return float(a[0]), float(lam[0]), float(d[0])


# --------------------------------------------------------------------------- full build

def _node_fractions(tree: LengthTree, config: BuildConfig) -> dict[int, np.ndarray]:
    """Non-equiangular image fractions, keyed by node id."""
    out: dict[int, np.ndarray] = {}
    counts = tree.child_count
    if config.distribution == "random":
        rng = random.Random(config.seed)
        for q in np.flatnonzero(counts > 1).tolist():
            out[q] = _random_fractions(int(counts[q]), rng)
    elif config.distribution == "explicit":
        for key, fr in config.directions.items():
            q = key if isinstance(key, int) else _resolve(tree, key)
            if len(fr) != counts[q] - 1:
                raise ConstructionError(f"node {key!r} has {counts[q]} children; "
                                        f"expected {counts[q] - 1} directions, got {len(fr)}")
            out[q] = np.asarray([0.0, *fr, 1.0])
    return out


def _resolve(tree: LengthTree, key: str) -> int:
    if key.isdigit():
        return int(key)
    try:
        return tree.find(key)
    except KeyError as exc:
        raise ConstructionError(str(exc)) from None


def root_lambda(tree: LengthTree, config: BuildConfig) -> float:
    L = stats(tree).L
    if config.lambda_value is None:
        return max(lambda_min(tree, config.eps_len).lambda_min, L * (1.0 + config.eps_len))
    if config.lambda_value < L * (1.0 - config.eps_len):
        raise ConstructionError(f"lambda={config.lambda_value} is shorter than the longest "
                                f"root path L={L}")
    return float(config.lambda_value)


def build_packing(tree: LengthTree, config: BuildConfig = BuildConfig()) -> Packing:
    """Construct the triangle packing of ``tree`` (rooted at its root)."""
    n = len(tree)
    counts = tree.child_count
    if config.wrap and counts[0] == 1:
        raise ConstructionError("a full cone (alpha = 2*pi) needs a root of degree at least 2")
    lam0 = root_lambda(tree, config)
    alpha0 = TWO_PI if config.wrap else float(config.alpha)
    csr_start, csr_kids = tree._csr
    special = _node_fractions(tree, config)
    weight = tree.weight
    parent = tree.parent
    is_leaf = counts == 0
    n_leaves = int(is_leaf.sum())
    n_x = n_leaves + (0 if config.wrap else 1)

    pos = np.zeros((n, 2))
    lam = np.empty(n)
    alpha = np.empty(n)
    dirn = np.empty(n)
    lam[0], alpha[0], dirn[0] = lam0, alpha0, config.root_direction
    first_x = np.full(n, -1, dtype=np.int64)
    last_x = np.full(n, -1, dtype=np.int64)
    ximg = np.empty((n_x, 2))
    x_left_child = np.full(n_x, -1, dtype=np.int64)
    x_used = 0
    levels: list[np.ndarray] = []

    frontier = np.zeros(1, dtype=np.int64)
    while frontier.size:
        Q = frontier[counts[frontier] > 0]
        if not Q.size:
            break
        levels.append(Q)
        k = counts[Q]
        koff = np.cumsum(k) - k
        kids = csr_kids[np.repeat(csr_start[Q] - koff, k) + np.arange(int(k.sum()))]
        if special:
            fracs = np.concatenate([special[q] if q in special else _equiangular(int(c))
                                    for q, c in zip(Q.tolist(), k.tolist())])
        else:
            xo = np.repeat(np.cumsum(k + 1) - (k + 1), k + 1)
            fracs = (np.arange(int((k + 1).sum())) - xo) / np.repeat(k, k + 1)
        w = weight[kids]
        too_long = w > lam[np.repeat(Q, k)] * (1.0 + config.eps_len)
        if np.any(too_long):
            c = int(kids[np.argmax(too_long)])
            raise ConstructionError(f"lambda not sufficiently large at node "
                                    f"{tree.display_labels[int(parent[c])]}")
        pts_x, pts_c, left, owner_c, j = _star_batch(pos[Q], dirn[Q], alpha[Q], lam[Q], k, fracs, w)

        xoff = np.cumsum(k + 1) - (k + 1)
        img = np.empty(pts_x.shape[0], dtype=np.int64)
        interior = np.ones(pts_x.shape[0], dtype=bool)
        interior[xoff] = False
        interior[xoff + k] = False
        if Q[0] == 0:
            # the root level holds only the root; its end images are new,
            # and shared for a full cone
            img[0] = x_used
            ximg[x_used] = pts_x[0]
            x_used += 1
            if config.wrap:
                img[k[0]] = img[0]
            else:
                img[k[0]] = x_used
                ximg[x_used] = pts_x[k[0]]
                x_used += 1
        else:
            img[xoff] = first_x[Q]
            img[xoff + k] = last_x[Q]
        n_new = int(interior.sum())
        img[interior] = np.arange(x_used, x_used + n_new)
        ximg[x_used:x_used + n_new] = pts_x[interior]
        x_used += n_new

        pos[kids] = pts_c
        first_x[kids] = img[left]
        last_x[kids] = img[left + 1]
        inner_right = j < k[owner_c] - 1
        x_left_child[img[left + 1][inner_right]] = kids[inner_right]

        a_c, lam_c, dir_c = _cup_batch(pos[parent[kids]], pts_c, ximg[first_x[kids]])
        if np.any(a_c <= 0):
            raise ConstructionError("degenerate cup (zero angle) encountered")
        alpha[kids], lam[kids], dirn[kids] = a_c, lam_c, dir_c
        frontier = kids

    assert x_used == n_x

    # boundary order: leaves by pre-order rank, each inner image right after
    # the last leaf of its left neighbouring subtree
    end = np.arange(1, n + 1)
    for Q in reversed(levels):
        last_child = csr_kids[csr_start[Q] + counts[Q] - 1]
        end[Q] = end[last_child]
    rank = np.cumsum(is_leaf) - 1
    n_slots = 2 * n_leaves + 3
    slot_kind = np.full(n_slots, -1, dtype=np.int64)
    slot_idx = np.zeros(n_slots, dtype=np.int64)
    leaves = np.flatnonzero(is_leaf)
    slot_kind[2 * rank[leaves] + 2] = 0
    slot_idx[2 * rank[leaves] + 2] = leaves
    inner = x_left_child >= 0
    xkey = np.empty(n_x, dtype=np.int64)
    xkey[inner] = 2 * rank[end[x_left_child[inner]] - 1] + 1
    xkey[0] = -1
    if not config.wrap:
        xkey[1] = 2 * n_leaves
        slot_kind[0] = 0
        slot_idx[0] = 0
    slot_kind[xkey + 2] = 1
    slot_idx[xkey + 2] = np.arange(n_x)
    keep = slot_kind >= 0
    boundary = np.column_stack((slot_kind[keep], slot_idx[keep]))

    # renumber images in boundary order
    is_x = boundary[:, 0] == 1
    renum = np.empty(n_x, dtype=np.int64)
    renum[boundary[is_x, 1]] = np.arange(n_x)
    boundary[is_x, 1] = np.arange(n_x)
    x_sorted = np.empty_like(ximg)
    x_sorted[renum] = ximg
    first_x, last_x = renum[first_x[1:]], renum[last_x[1:]]

    tri = np.empty((2 * (n - 1), 3), dtype=np.int64)
    kids_all = np.arange(1, n)
    tri[0::2, 0] = parent[1:]
    tri[1::2, 0] = parent[1:]
    tri[0::2, 1] = kids_all
    tri[1::2, 1] = kids_all
    tri[0::2, 2] = first_x
    tri[1::2, 2] = last_x

    for arr in (pos, x_sorted, boundary, tri, lam, alpha, dirn):
        arr.flags.writeable = False
    return Packing(tree=tree, config=config, node_pos=pos, x_images=x_sorted, wrap=config.wrap,
                   boundary=boundary, triangle_index=tri, per_node_lambda=lam,
                   per_node_alpha=alpha, per_node_direction=dirn)


def theta_x(packing: Packing) -> tuple[float, np.ndarray]:
    """Total angle glued at the source, plus its split over the x-images."""
    return packing.theta_x, packing.theta_x_by_image()
