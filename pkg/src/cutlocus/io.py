"""Packing and report serialization.

Floats are written in shortest round-trip form, so a packing read back
reproduces the stored coordinates bit for bit.
"""
from __future__ import annotations

import gc
import json
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import numpy as np

try:
    import orjson
except ImportError:  # pragma: no cover - orjson is a declared dependency
    orjson = None

from .packer import BuildConfig, Packing
from .tree import LengthTree, TreeParseError, tree_from_obj

FORMAT = "cutlocus.packing/1"


class PackingFormatError(ValueError):
    """A packing file that cannot be read back."""


@contextmanager
def gc_paused():
    """Suspend the cyclic collector while bulk-building acyclic containers.

    Large packings allocate millions of small dicts and lists; letting the
    collector rescan them on every threshold crossing roughly triples the
    serialization time.
    """
    was = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was:
            gc.enable()


def dumps(obj: Any, indent: bool = False) -> bytes:
    """Deterministic JSON bytes (sorted keys are not needed: dicts keep insertion order)."""
    if orjson is not None:
        opt = orjson.OPT_SERIALIZE_NUMPY | (orjson.OPT_INDENT_2 if indent else 0)
        try:
            return orjson.dumps(obj, option=opt)
        except orjson.JSONEncodeError:
            pass  # nesting deeper than orjson allows; the stdlib copes
    return json.dumps(obj, indent=2 if indent else None, default=_np_default).encode()


def loads(data: bytes | str) -> Any:
    if orjson is not None:
        try:
            return orjson.loads(data)
        except orjson.JSONDecodeError as exc:
            if "recursion" not in str(exc).lower():
                raise
    return json.loads(data)


def _np_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _columns(packing: Packing, tree_obj: dict | None):
    """Top-level fields in document order."""
    tree = packing.tree
    pos, xi, ti, bd = packing.node_pos, packing.x_images, packing.triangle_index, packing.boundary
    return [
        ("format", FORMAT),
        ("tree", tree.to_json_obj() if tree_obj is None else tree_obj),
        ("config", packing.config.to_json_obj()),
        ("wrap", packing.wrap),
        ("nodes", _Records(("id", "x", "y"), (np.arange(len(tree)), pos[:, 0], pos[:, 1]))),
        ("x_images", _Records(("x", "y"), (xi[:, 0], xi[:, 1]))),
        ("boundary", _Records(None, (bd[:, 0], bd[:, 1]))),
        ("triangles", _Records(("parent", "child", "apex"), (ti[:, 0], ti[:, 1], ti[:, 2]))),
        ("per_node", {"lambda": packing.per_node_lambda, "alpha": packing.per_node_alpha,
                      "direction": packing.per_node_direction}),
        ("theta_x", packing.theta_x),
    ]


_BOUNDARY_KEYS = ("node", "x")


class _Records:
    """An array of small JSON objects held as numpy columns.

    ``keys`` of None marks boundary refs: the first column picks the key
    ("node" or "x") and the second holds the index.
    """

    def __init__(self, keys, columns):
        self.keys, self.columns = keys, columns

    def to_list(self) -> list:
        cols = [c.tolist() for c in self.columns]
        if self.keys is None:
            return [{_BOUNDARY_KEYS[k]: i} for k, i in zip(*cols)]
        # dict displays beat dict(zip(...)) by a fifth on 1e5-record arrays
        if len(self.keys) == 2:
            a, b = self.keys
            return [{a: u, b: v} for u, v in zip(*cols)]
        if len(self.keys) == 3:
            a, b, c = self.keys
            return [{a: u, b: v, c: w} for u, v, w in zip(*cols)]
        return [dict(zip(self.keys, vals)) for vals in zip(*cols)]


def packing_to_obj(packing: Packing, tree_obj: dict | None = None) -> dict:
    """JSON object for a packing. ``tree_obj`` may pass through an already
    serialized form of ``packing.tree`` to skip rebuilding it."""
    with gc_paused():
        return {k: v.to_list() if isinstance(v, _Records) else v
                for k, v in _columns(packing, tree_obj)}


def dump_packing(packing: Packing, path: str | Path | None = None, tree_obj: dict | None = None) -> bytes:
    data = dumps(packing_to_obj(packing, tree_obj))
    if path is not None:
        Path(path).write_bytes(data)
    return data


def packing_from_obj(obj: Any) -> Packing:
    with gc_paused():
        return _packing_from_obj(obj)


def _packing_from_obj(obj: Any) -> Packing:
    if not isinstance(obj, dict) or obj.get("format") != FORMAT:
        raise PackingFormatError(f"not a packing document (expected format {FORMAT!r})")
    try:
        tree = tree_from_obj(obj["tree"])
        config = BuildConfig.from_json_obj(obj["config"])
        nodes = obj["nodes"]
        if [d["id"] for d in nodes] != list(range(len(tree))):
            raise PackingFormatError("node ids must run 0..n-1 in tree pre-order")
        node_pos = np.array([[d["x"], d["y"]] for d in nodes], dtype=float).reshape(-1, 2)
        x_images = np.array([[d["x"], d["y"]] for d in obj["x_images"]], dtype=float).reshape(-1, 2)
        boundary = np.array([[0, d["node"]] if "node" in d else [1, d["x"]] for d in obj["boundary"]],
                            dtype=np.int64).reshape(-1, 2)
        tri = np.array([[d["parent"], d["child"], d["apex"]] for d in obj["triangles"]],
                       dtype=np.int64).reshape(-1, 3)
        per = obj["per_node"]
        lam, alp, dirs = (np.asarray(per[k], dtype=float) for k in ("lambda", "alpha", "direction"))
    except TreeParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PackingFormatError):
            raise
        raise PackingFormatError(f"malformed packing: {exc!r}") from None
    if tri.shape[0] != 2 * tree.m:
        raise PackingFormatError("expected two triangles per tree edge")
    if boundary.size and ((boundary[:, 0] == 0) & (boundary[:, 1] >= len(tree))).any():
        raise PackingFormatError("boundary refers to an unknown node")
    if boundary.size and ((boundary[:, 0] == 1) & (boundary[:, 1] >= len(x_images))).any():
        raise PackingFormatError("boundary refers to an unknown x-image")
    return Packing(tree=tree, config=config, node_pos=node_pos, x_images=x_images,
                   wrap=bool(obj.get("wrap", config.wrap)), boundary=boundary,
                   triangle_index=tri, per_node_lambda=lam, per_node_alpha=alp,
                   per_node_direction=dirs)


def load_packing(path: str | Path) -> Packing:
    data = Path(path).read_bytes()
    with gc_paused():
        obj = loads(data)
    return packing_from_obj(obj)


def tree_to_bytes(tree: LengthTree) -> bytes:
    return dumps(tree.to_json_obj(), indent=True)
