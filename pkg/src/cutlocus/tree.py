"""Positively weighted ordered trees ("length trees").

Node ids are always assigned in pre-order, so the root is node 0, every
parent id is smaller than its children's ids, and siblings appear in
increasing id order exactly as they were listed in the input.
"""
from __future__ import annotations

import json
import math
from functools import cached_property
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np

try:
    import orjson
except ImportError:  # pragma: no cover
    orjson = None


class TreeParseError(ValueError):
    """Raised for malformed tree input; carries a JSON path and, for syntax
    errors, the line/column of the failure."""

    def __init__(self, message: str, path: str = "$", line: int | None = None,
                 col: int | None = None):
        self.path = path
        self.line = line
        self.col = col
        where = path
        if line is not None:
            where = f"line {line}, column {col}"
        super().__init__(f"{message} (at {where})")


class TreeNode(NamedTuple):
    id: int
    parent: int | None
    weight_to_parent: float | None
    children: tuple[int, ...]
    label: str | None


class TreeStats(NamedTuple):
    m: int
    n_leaves: int
    L: float
    depth: int
    ell: float


class LengthTree:
    """A rooted tree with strictly positive edge weights and a fixed child order.

    ``parent[i]`` is -1 for the root and ``weight[i]`` is the length of the
    edge from ``i`` to its parent (0.0 at the root).
    """

    root = 0

    def __init__(self, parent: Sequence[int], weight: Sequence[float],
                 labels: Sequence[str | None] | None = None, *, _trusted: bool = False):
        parent = np.asarray(parent, dtype=np.int64)
        weight = np.asarray(weight, dtype=np.float64)
        n = parent.size
        if labels is None:
            labels = (None,) * n
        labels = tuple(labels)
        if not _trusted:
            _check_preorder(parent, weight, labels)
        parent.flags.writeable = False
        weight.flags.writeable = False
        self.parent = parent
        self.weight = weight
        self.labels = labels

    def __len__(self) -> int:
        return self.parent.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LengthTree):
            return NotImplemented
        return (np.array_equal(self.parent, other.parent)
                and np.array_equal(self.weight, other.weight)
                and self.labels == other.labels)

    def __hash__(self) -> int:
        return hash((self.parent.tobytes(), self.weight.tobytes(), self.labels))

    def __repr__(self) -> str:
        return f"LengthTree(n_nodes={len(self)}, m={self.m})"

    @property
    def m(self) -> int:
        return len(self) - 1

    @cached_property
    def child_count(self) -> np.ndarray:
        return np.bincount(self.parent[1:], minlength=len(self))

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.argsort(self.parent[1:], kind="stable") + 1
        start = np.cumsum(self.child_count) - self.child_count
        return start, order

    def children(self, i: int) -> tuple[int, ...]:
        start, order = self._csr
        s = start[i]
        return tuple(order[s:s + self.child_count[i]].tolist())

    @cached_property
    def nodes(self) -> tuple[TreeNode, ...]:
        out = []
        for i in range(len(self)):
            p = int(self.parent[i])
            out.append(TreeNode(i, None if p < 0 else p,
                                None if p < 0 else float(self.weight[i]),
                                self.children(i), self.labels[i]))
        return tuple(out)

    @cached_property
    def is_leaf(self) -> np.ndarray:
        leaf = self.child_count == 0
        if len(self) > 1:
            leaf[0] = False
        return leaf

    @cached_property
    def depth(self) -> np.ndarray:
        d = np.zeros(len(self), dtype=np.int64)
        par = self.parent.tolist()
        dl = d.tolist()
        for i in range(1, len(par)):
            dl[i] = dl[par[i]] + 1
        return np.asarray(dl, dtype=np.int64)

    @cached_property
    def root_distance(self) -> np.ndarray:
        """Weighted distance from the root to every node."""
        par = self.parent.tolist()
        w = self.weight.tolist()
        dist = [0.0] * len(par)
        for i in range(1, len(par)):
            dist[i] = dist[par[i]] + w[i]
        return np.asarray(dist)

    @cached_property
    def display_labels(self) -> tuple[str, ...]:
        """Given labels, or auto labels ``u``, ``u1``, ``u12``... (child rank appended)."""
        out: list[str] = [""] * len(self)
        rank = [0] * len(self)
        counter = [0] * len(self)
        par = self.parent.tolist()
        for i in range(1, len(par)):
            counter[par[i]] += 1
            rank[i] = counter[par[i]]
        auto = ["u"] + [""] * (len(par) - 1)
        for i in range(1, len(par)):
            r = rank[i]
            auto[i] = auto[par[i]] + (str(r) if r < 10 else f"({r})")
        for i, lab in enumerate(self.labels):
            out[i] = lab if lab is not None else auto[i]
        return tuple(out)

    def find(self, label: str) -> int:
        """Node id for a label (explicit label first, then auto label)."""
        for labels in (self.labels, self.display_labels):
            hits = [i for i, lab in enumerate(labels) if lab == label]
            if len(hits) > 1:
                raise KeyError(f"label {label!r} is ambiguous")
            if hits:
                return hits[0]
        raise KeyError(f"no node labelled {label!r}")

    def neighbors(self, i: int) -> list[int]:
        """Cyclic order around ``i``: parent first, then children."""
        p = int(self.parent[i])
        kids = list(self.children(i))
        return kids if p < 0 else [p] + kids

    def to_json_obj(self) -> dict[str, Any]:
        objs: list[dict[str, Any]] = []
        par = self.parent.tolist()
        w = self.weight.tolist()
        for i in range(len(par)):
            o: dict[str, Any] = {}
            if self.labels[i] is not None:
                o["label"] = self.labels[i]
            if i > 0:
                o["weight"] = w[i]
                objs[par[i]].setdefault("children", []).append(o)
            objs.append(o)
        return objs[0]

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_json_obj(), indent=indent)


def _check_preorder(parent: np.ndarray, weight: np.ndarray, labels: tuple) -> None:
    n = parent.size
    if n < 2:
        raise ValueError("a length tree needs at least one edge")
    if weight.size != n or len(labels) != n:
        raise ValueError("parent, weight and labels must have equal length")
    if parent[0] != -1:
        raise ValueError("node 0 must be the root")
    stack = [0]
    for i in range(1, n):
        p = int(parent[i])
        while stack and stack[-1] != p:
            stack.pop()
        if not stack:
            raise ValueError(f"node ids are not in pre-order at node {i}")
        stack.append(i)
    w = weight[1:]
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("edge weights must be finite and strictly positive")


def from_adjacency(neighbors: Sequence[Sequence[int]], weights: dict[tuple[int, int], float],
                   root: int, labels: Sequence[str | None] | None = None) -> LengthTree:
    """Build a pre-order tree from cyclic neighbor lists.

    The children of a non-root node are its neighbors read cyclically, starting
    just after the neighbor it was reached from; the root keeps its list as is.
    """
    parent: list[int] = []
    weight: list[float] = []
    out_labels: list[str | None] = []
    stack = [(root, -1, -1)]
    while stack:
        v, from_v, new_parent = stack.pop()
        vid = len(parent)
        parent.append(new_parent)
        weight.append(0.0 if from_v < 0 else weights[_ekey(v, from_v)])
        out_labels.append(labels[v] if labels is not None else None)
        nb = list(neighbors[v])
        if from_v >= 0:
            k = nb.index(from_v)
            nb = nb[k + 1:] + nb[:k]
        for c in reversed(nb):
            stack.append((c, v, vid))
    return LengthTree(parent, weight, out_labels, _trusted=True)


def _ekey(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _adjacency(tree: LengthTree) -> tuple[list[list[int]], dict[tuple[int, int], float]]:
    nbrs = [tree.neighbors(i) for i in range(len(tree))]
    w = tree.weight.tolist()
    par = tree.parent.tolist()
    weights = {_ekey(i, par[i]): w[i] for i in range(1, len(par))}
    return nbrs, weights


# --------------------------------------------------------------------------- parsing

def parse_tree(text: str | bytes) -> LengthTree:
    """Parse the nested JSON tree format into a :class:`LengthTree`."""
    try:
        obj = orjson.loads(text) if orjson is not None else json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeParseError(f"malformed JSON: {exc.msg}", line=exc.lineno, col=exc.colno) from None
    except RecursionError:
        raise TreeParseError("tree nesting too deep for the JSON reader") from None
    return tree_from_obj(obj)


def tree_from_obj(obj: Any) -> LengthTree:
    if not isinstance(obj, dict):
        raise TreeParseError("tree must be a JSON object")
    if "weight" in obj:
        raise TreeParseError("the root node must not carry a weight", "$.weight")
    parent: list[int] = []
    weight: list[float] = []
    labels: list[str | None] = []
    slot: list[int] = []
    stack: list[tuple[Any, int, int]] = [(obj, -1, -1)]
    while stack:
        node, p, k = stack.pop()
        i = len(parent)
        parent.append(p)
        slot.append(k)
        if not isinstance(node, dict):
            raise TreeParseError("node must be a JSON object", _path(parent, slot, i))
        if p >= 0:
            w = node.get("weight")
            if w is None:
                raise TreeParseError("missing weight", _path(parent, slot, i))
            if isinstance(w, bool) or not isinstance(w, (int, float)):
                raise TreeParseError("weight must be a number", _path(parent, slot, i) + ".weight")
            w = float(w)
            if not math.isfinite(w) or w <= 0:
                raise TreeParseError(f"weight must be positive and finite, got {w}",
                                     _path(parent, slot, i) + ".weight")
            weight.append(w)
        else:
            weight.append(0.0)
        lab = node.get("label")
        if lab is not None and not isinstance(lab, str):
            raise TreeParseError("label must be a string", _path(parent, slot, i) + ".label")
        labels.append(lab)
        kids = node.get("children", [])
        if not isinstance(kids, list):
            raise TreeParseError("children must be a list", _path(parent, slot, i) + ".children")
        for j in range(len(kids) - 1, -1, -1):
            stack.append((kids[j], i, j))
    if len(parent) < 2:
        raise TreeParseError("empty tree: the root has no children")
    return LengthTree(parent, weight, labels, _trusted=True)


def _path(parent: list[int], slot: list[int], i: int) -> str:
    parts = []
    while parent[i] >= 0:
        parts.append(f".children[{slot[i]}]")
        i = parent[i]
    return "$" + "".join(reversed(parts))


def star(weights: Iterable[float], labels: Sequence[str] | None = None) -> LengthTree:
    """Root with one leaf per weight, in the given order."""
    weights = list(weights)
    return LengthTree([-1] + [0] * len(weights), [0.0] + weights,
                      [None] + (list(labels) if labels else [None] * len(weights)))


# --------------------------------------------------------------------------- operations

def normalize(tree: LengthTree) -> LengthTree:
    """Merge away every degree-2 node, summing the two incident weights.

    A degree-2 root is deleted and its first child becomes the new root, with
    the merged edge taking the old root's place in that child's cyclic order.
    """
    deg = tree.child_count + (tree.parent >= 0)
    if not np.any(deg == 2):
        return tree
    nbrs, weights = _adjacency(tree)
    root = 0
    alive = [True] * len(tree)
    todo = [i for i in range(len(tree)) if len(nbrs[i]) == 2]
    while todo:
        v = todo.pop()
        if not alive[v] or len(nbrs[v]) != 2:
            continue
        a, b = nbrs[v]
        w = weights.pop(_ekey(v, a)) + weights.pop(_ekey(v, b))
        nbrs[a][nbrs[a].index(v)] = b
        nbrs[b][nbrs[b].index(v)] = a
        weights[_ekey(a, b)] = w
        alive[v] = False
        if v == root:
            root = a
            todo.append(a)
    return from_adjacency(nbrs, weights, root, tree.labels)


def reroot(tree: LengthTree, new_root: int) -> LengthTree:
    """Re-hang the same weighted tree from ``new_root``, keeping every cyclic order.

    The new root's children start with its former parent.
    """
    if not 0 <= new_root < len(tree):
        raise IndexError(f"unknown node index {new_root}")
    if new_root == tree.root:
        return tree
    nbrs, weights = _adjacency(tree)
    return from_adjacency(nbrs, weights, new_root, tree.labels)


def stats(tree: LengthTree) -> TreeStats:
    dist = tree.root_distance
    return TreeStats(m=tree.m, n_leaves=int(tree.is_leaf.sum()), L=float(dist.max()),
                     depth=int(tree.depth.max()), ell=float(tree.weight[1:].max()))


def canonical_form(tree: LengthTree) -> tuple:
    """Hashable form equal for trees that differ only by a rotation of the
    root's children (the root order is cyclic; all others are fixed by the
    parent edge). Labels are ignored."""
    par = tree.parent.tolist()
    w = tree.weight.tolist()
    forms: list[Any] = [None] * len(par)
    kids: list[list[int]] = [[] for _ in par]
    for i in range(1, len(par)):
        kids[par[i]].append(i)
    for i in range(len(par) - 1, -1, -1):
        forms[i] = tuple((w[c], forms[c]) for c in kids[i])
    top = forms[0]
    return min(top[r:] + top[:r] for r in range(len(top)))


def leaf_distances(tree: LengthTree) -> dict[tuple[str, str], float]:
    """Pairwise path lengths between degree-1 nodes, keyed by display label."""
    deg = tree.child_count + (tree.parent >= 0)
    ends = [i for i in range(len(tree)) if deg[i] == 1]
    nbrs, weights = _adjacency(tree)
    labels = tree.display_labels
    out = {}
    for s in ends:
        dist = {s: 0.0}
        stack = [s]
        while stack:
            v = stack.pop()
            for u in nbrs[v]:
                if u not in dist:
                    dist[u] = dist[v] + weights[_ekey(u, v)]
                    stack.append(u)
        for t in ends:
            if t != s:
                out[(labels[s], labels[t])] = dist[t]
    return out


def random_tree(n_leaves: int, seed: int = 0, weight_range: tuple[float, float] = (0.1, 10.0),
                max_children: int = 3, root_children: tuple[int, int] = (3, 5)) -> LengthTree:
    """Random normalized tree with exactly ``n_leaves`` leaves.

    The root gets between ``root_children`` children (capped by the leaf
    budget); then random leaves sprout 2..``max_children`` children until the
    leaf count is reached. No node of degree 2 is ever created.
    """
    if n_leaves < 2:
        raise ValueError("need at least two leaves")
    rng = np.random.default_rng(seed)
    k0 = int(rng.integers(root_children[0], root_children[1] + 1))
    k0 = min(k0, n_leaves) if n_leaves >= 3 else n_leaves
    kids: list[list[int]] = [list(range(1, k0 + 1))] + [[] for _ in range(k0)]
    leaves = list(range(1, k0 + 1))
    count = k0
    while count < n_leaves:
        k = int(rng.integers(2, max_children + 1))
        k = min(k, n_leaves - count + 1)
        j = int(rng.integers(len(leaves)))
        v = leaves[j]
        leaves[j] = leaves[-1]
        leaves.pop()
        new = list(range(len(kids), len(kids) + k))
        kids[v] = new
        kids.extend([] for _ in new)
        leaves.extend(new)
        count += k - 1
    n = len(kids)
    w = rng.uniform(weight_range[0], weight_range[1], size=n).tolist()
    parent: list[int] = []
    weight: list[float] = []
    stack = [(0, -1)]
    while stack:
        v, p = stack.pop()
        vid = len(parent)
        parent.append(p)
        weight.append(0.0 if p < 0 else w[v])
        for c in reversed(kids[v]):
            stack.append((c, vid))
    return LengthTree(parent, weight, _trusted=True)
