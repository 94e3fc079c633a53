"""Command-line driver: build, validate, verify, bound, render, demo.

Exit codes: 0 ok, 1 validation or construction failure, 2 input error,
3 verification mismatch.
"""
from __future__ import annotations

import argparse
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import io
from .packer import BuildConfig, ConstructionError, build_packing, lambda_min
from .render import RenderStyle, render_svg
from .ridge import RidgeExtractionError, bisector_oracle, extract_ridge, match_tree
from .tree import LengthTree, TreeParseError, normalize, reroot, stats, tree_from_obj
from .validator import validate

EXIT_OK, EXIT_INVALID, EXIT_INPUT, EXIT_MISMATCH = 0, 1, 2, 3


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def _err(msg: str) -> None:
    print(f"cutlocus: {msg}", file=sys.stderr)


def _read_bytes(path: str) -> bytes:
    try:
        return sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_tree(path: str) -> tuple[LengthTree, dict]:
    data = _read_bytes(path)
    try:
        with io.gc_paused():
            obj = io.loads(data)
    except ValueError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        where = f" (line {line}, column {col})" if line is not None else ""
        raise InputError(f"{path}: malformed JSON{where}: {getattr(exc, 'msg', exc)}") from None
    try:
        with io.gc_paused():
            tree = tree_from_obj(obj)
    except TreeParseError as exc:
        raise InputError(f"{path}: {exc}") from None
    return tree, obj


def _load_packing(path: str):
    data = _read_bytes(path)
    try:
        with io.gc_paused():
            obj = io.loads(data)
        return io.packing_from_obj(obj)
    except (TreeParseError, io.PackingFormatError) as exc:
        raise InputError(f"{path}: {exc}") from None
    except ValueError as exc:
        raise InputError(f"{path}: malformed JSON: {exc}") from None


def _write(path: str | None, data: bytes | str) -> None:
    if isinstance(data, str):
        data = data.encode()
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    Path(path).write_bytes(data)


def _parse_lambda(text: str) -> float | None:
    if text == "auto":
        return None
    try:
        v = float(text)
    except ValueError:
        raise InputError(f"--lambda expects 'auto' or a number, got {text!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise InputError("--lambda must be a positive number")
    return v


def _parse_dist(text: str) -> tuple[str, int, dict | None]:
    if text == "equiangular":
        return "equiangular", 0, None
    if text.startswith("random"):
        seed = text.partition(":")[2] or "0"
        try:
            return "random", int(seed), None
        except ValueError:
            raise InputError(f"bad random seed {seed!r}") from None
    # anything else names a JSON file mapping node label -> direction fractions
    try:
        obj = io.loads(_read_bytes(text))
    except ValueError as exc:
        raise InputError(f"{text}: malformed JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise InputError(f"{text}: expected an object mapping node labels to fraction lists")
    return "explicit", 0, obj


def make_config(alpha_deg: float, lam: str, dist: str, root_direction_deg: float = 0.0) -> BuildConfig:
    if not (0 < alpha_deg <= 360):
        raise InputError(f"--alpha must lie in (0, 360] degrees, got {alpha_deg}")
    kind, seed, directions = _parse_dist(dist)
    try:
        return BuildConfig(alpha=math.radians(alpha_deg), lambda_value=_parse_lambda(lam),
                           distribution=kind, seed=seed, directions=directions,
                           root_direction=math.radians(root_direction_deg))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def prepare_tree(tree: LengthTree, root: str | None) -> LengthTree:
    out = normalize(tree)
    if root is not None:
        try:
            out = reroot(out, out.find(root))
        except KeyError:
            raise InputError(f"no node labelled {root!r} (after merging degree-2 nodes)") from None
    return out


# --------------------------------------------------------------------------- commands

def cmd_build(args) -> int:
    # short-lived and allocation heavy: the cyclic collector only costs time here
    with io.gc_paused():
        return _build(args)


def _build(args) -> int:
    tree, raw = _load_tree(args.tree)
    config = make_config(args.alpha, args.lam, args.dist, args.root_direction)
    prepared = prepare_tree(tree, args.root)
    try:
        packing = build_packing(prepared, config)
    except (ConstructionError, ValueError) as exc:
        _err(f"construction failed: {exc}")
        return EXIT_INVALID
    # the parsed document can stand in for the tree when nothing was changed
    tree_obj = raw if prepared is tree else None
    _write(args.out, io.dump_packing(packing, tree_obj=tree_obj))
    if args.out not in (None, "-"):
        st = stats(prepared)
        print(f"wrote {args.out}: {len(prepared)} nodes, {len(packing.x_images)} x-images, "
              f"{st.n_leaves} leaves, lambda = {packing.per_node_lambda[0]:.6g}, "
              f"theta_x = {math.degrees(packing.theta_x):.4f} deg")
    return EXIT_OK


def cmd_validate(args) -> int:
    packing = _load_packing(args.packing)
    report = validate(packing)
    print(report.summary())
    if args.report:
        _write(args.report, io.dumps(report.to_json_obj(), indent=True))
    return EXIT_OK if report.agt_ok else EXIT_INVALID


def cmd_verify(args) -> int:
    packing = _load_packing(args.packing)
    report = validate(packing)
    print(report.summary())
    out = {"validation": report.to_json_obj()}
    verdict = EXIT_OK if report.agt_ok else EXIT_INVALID
    if verdict == EXIT_OK and args.mode in ("voronoi", "both"):
        try:
            ridge = extract_ridge(packing)
            match = match_tree(ridge, packing.tree, packing.node_pos)
        except RidgeExtractionError as exc:
            print(f"voronoi ridge       FAIL  {exc}")
            out["match"] = {"isomorphic": False, "reason": str(exc)}
            verdict = EXIT_MISMATCH
        else:
            out["ridge"] = ridge.to_json_obj()
            out["match"] = match.to_json_obj()
            print(f"voronoi ridge       {'PASS' if match.isomorphic else 'FAIL'}  "
                  f"orientation {match.orientation}, max length error {match.max_length_error:.3e}"
                  + ("" if match.isomorphic else f"  ({match.reason})"))
            if not match.isomorphic:
                verdict = EXIT_MISMATCH
    if verdict == EXIT_OK and args.mode in ("oracle", "both"):
        oracle = bisector_oracle(packing, args.samples)
        out["oracle"] = oracle.to_json_obj()
        print(f"bisector oracle     {'PASS' if oracle.ok else 'FAIL'}  "
              f"worst residual {oracle.worst_residual:.3e} (tol {oracle.tolerance:.1e}), "
              f"max length error {oracle.max_length_error:.3e}")
        if not oracle.ok:
            verdict = EXIT_MISMATCH
    if args.report:
        _write(args.report, io.dumps(out, indent=True))
    return verdict


def cmd_bound(args) -> int:
    tree, _ = _load_tree(args.tree)
    b = lambda_min(normalize(tree))
    print(f"m = {b.m}, L = {b.L:.6g}, longest edge = {b.ell:.6g}")
    if b.D is None:
        print(f"single edge: any lambda > L = {b.L:.6g} works")
    else:
        print(f"D = L cot(pi/m) = {b.D:.6g}")
        print(f"lambda_min = {b.lambda_min:.6f}  ({b.note})")
    return EXIT_OK


def cmd_render(args) -> int:
    packing = _load_packing(args.packing)
    ridge = None
    if args.overlay_ridge:
        try:
            ridge = extract_ridge(packing)
        except RidgeExtractionError as exc:
            _err(f"cannot overlay the ridge: {exc}")
            return EXIT_INVALID
    style = RenderStyle(labels=not args.no_labels, triangles=not args.no_triangles)
    svg = render_svg(packing, style, ridge=ridge)
    try:
        _write(args.svg, svg)
    except OSError as exc:
        _err(f"cannot write {args.svg}: {exc.strerror}")
        return EXIT_INVALID
    return EXIT_OK


# --------------------------------------------------------------------------- demos

DEMOS = {
    "fig3": ("fig3.json", 120.0, 4.0, "equiangular"),
    "fig4a": ("fig4.json", 270.0, 6.0, "equiangular"),
    "fig4b": ("fig4.json", 180.0, 5.0, "random:1"),
    "fig4c": ("fig4.json", 360.0, 6.0, "equiangular"),
    "fig5-class": ("fig5_class.json", 360.0, 5.0, "equiangular"),
    "fig6-class": ("fig6_class.json", 360.0, 10.0, "equiangular"),
}

_DEMO_NOTES = {
    "fig5-class": "tree of our choosing with 8 leaves, 13 edges, height 3 and L = 5 "
                  "(the published figure's edge lengths are not available)",
    "fig6-class": "regular degree-3 tree with 48 leaves and seeded lengths in [0.5, 1.5]; "
                  "its theta_x is reported, not compared with the published figure",
}


def demo_tree_bytes(name: str) -> bytes:
    return resources.files("cutlocus.data").joinpath(DEMOS[name][0]).read_bytes()


def cmd_demo(args) -> int:
    fname, alpha, lam, dist = DEMOS[args.figure]
    outdir = Path(args.outdir or f"demo-{args.figure}")
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        _err(f"cannot create {outdir}: {exc.strerror}")
        return EXIT_INVALID
    raw = demo_tree_bytes(args.figure)
    (outdir / "tree.json").write_bytes(raw)
    tree = normalize(tree_from_obj(io.loads(raw)))
    config = make_config(alpha, str(lam), dist)
    (outdir / "config.json").write_bytes(io.dumps(config.to_json_obj(), indent=True))
    packing = build_packing(tree, config)
    io.dump_packing(packing, outdir / "packing.json")
    report = validate(packing)
    ridge = extract_ridge(packing)
    match = match_tree(ridge, tree, packing.node_pos)
    (outdir / "figure.svg").write_text(render_svg(packing, RenderStyle(labels=len(tree) < 40),
                                                  ridge=ridge, title=args.figure))
    st = stats(tree)
    print(f"{args.figure}: alpha = {alpha:g} deg, lambda = {lam:g}, distribution {dist}")
    print(f"tree: m = {st.m}, leaves = {st.n_leaves}, L = {st.L:g}, height = {st.depth}")
    if args.figure in _DEMO_NOTES:
        print(f"note: {_DEMO_NOTES[args.figure]}")
    print(f"x-images: {len(packing.x_images)}")
    print(report.summary())
    print(f"ridge matches tree: {match.isomorphic} ({match.orientation})")
    if args.figure == "fig5-class":
        b = lambda_min(tree)
        print(f"sufficient bound: lambda_min = {b.lambda_min:.4f} ({b.note})")
        for v in (5.0, 10.0, 26.0):
            p = build_packing(tree, BuildConfig(lambda_value=v))
            print(f"  lambda = {v:>4g}: theta_x = {math.degrees(p.theta_x):.3f} deg")
    print(f"wrote {outdir}/tree.json, config.json, packing.json, figure.svg")
    ok = report.agt_ok and match.isomorphic
    return EXIT_OK if ok else EXIT_MISMATCH


# --------------------------------------------------------------------------- entry

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cutlocus",
                                 description="Realize length trees as cut loci via triangle packings.")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="pack a tree and write the packing JSON")
    b.add_argument("tree", help="tree JSON file ('-' for stdin)")
    b.add_argument("--alpha", type=float, default=360.0, help="root cone angle in degrees (default 360)")
    b.add_argument("--lambda", dest="lam", default="auto", help="root radius, or 'auto' (default)")
    b.add_argument("--dist", default="equiangular",
                   help="equiangular, random:SEED, or a JSON file of per-node direction fractions")
    b.add_argument("--root", help="label of the node to root the tree at")
    b.add_argument("--root-direction", type=float, default=0.0,
                   help="direction of the root cone bisector in degrees")
    b.add_argument("--out", help="output file (default stdout)")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("validate", help="check the gluing preconditions of a packing")
    v.add_argument("packing")
    v.add_argument("--report", help="write the report as JSON")
    v.set_defaults(func=cmd_validate)

    f = sub.add_parser("verify", help="validate and check that the cut locus is the tree")
    f.add_argument("packing")
    f.add_argument("--mode", choices=("voronoi", "oracle", "both"), default="both")
    f.add_argument("--samples", type=int, default=16, help="oracle samples per edge")
    f.add_argument("--report", help="write validation and match reports as JSON")
    f.set_defaults(func=cmd_verify)

    k = sub.add_parser("bound", help="print the sufficient lambda bound for a tree")
    k.add_argument("tree")
    k.set_defaults(func=cmd_bound)

    r = sub.add_parser("render", help="draw a packing as SVG")
    r.add_argument("packing")
    r.add_argument("--svg", help="output file (default stdout)")
    r.add_argument("--overlay-ridge", action="store_true", help="draw the extracted Voronoi ridge")
    r.add_argument("--no-labels", action="store_true")
    r.add_argument("--no-triangles", action="store_true")
    r.set_defaults(func=cmd_render)

    d = sub.add_parser("demo", help="reproduce one of the figure setups")
    d.add_argument("figure", choices=tuple(DEMOS))
    d.add_argument("--outdir", help="output directory (default demo-FIGURE)")
    d.set_defaults(func=cmd_demo)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "samples", 2) < 2:
        parser.error("--samples must be at least 2")
    try:
        return args.func(args)
    except InputError as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
