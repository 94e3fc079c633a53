import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cutlocus import (BuildConfig, LengthTree, bisector_oracle, build_packing, extract_ridge,
                      match_tree, star)
from cutlocus.geometry import polygon_area
from cutlocus.ridge import BOUNDARY_LEAF, BOUNDARY_ROOT, RAMIFICATION, voronoi_cell
from cutlocus.tree import random_tree

from conftest import ALPHAS
from oracles import raster_cut_locus

TWO_PI = 2 * math.pi


def demo_packings(fig3_tree, fig4_tree, fig5_tree):
    return [
        build_packing(fig3_tree, BuildConfig(alpha=math.radians(120), lambda_value=4)),
        build_packing(fig4_tree, BuildConfig(alpha=math.radians(270), lambda_value=6)),
        build_packing(fig4_tree, BuildConfig(alpha=math.pi, lambda_value=5, distribution="random", seed=1)),
        build_packing(fig4_tree, BuildConfig(alpha=TWO_PI, lambda_value=6)),
        build_packing(fig5_tree, BuildConfig(lambda_value=5)),
    ]


def test_demo_ridges_match(fig3_tree, fig4_tree, fig5_tree):
    for p in demo_packings(fig3_tree, fig4_tree, fig5_tree):
        ridge = extract_ridge(p)
        m = match_tree(ridge, p.tree, p.node_pos)
        assert m.isomorphic, m.reason
        assert m.orientation == "ccw"
        assert m.max_length_error < 1e-9
        assert bisector_oracle(p).ok


def test_vertex_kinds(fig3_tree, fig4_tree):
    r = extract_ridge(build_packing(fig3_tree, BuildConfig(alpha=math.radians(120), lambda_value=4)))
    kinds = sorted(v.kind for v in r.vertices)
    assert kinds == sorted([BOUNDARY_ROOT] + [BOUNDARY_LEAF] * 3)
    r = extract_ridge(build_packing(fig4_tree, BuildConfig(alpha=TWO_PI, lambda_value=6)))
    assert sorted(v.kind for v in r.vertices) == sorted([RAMIFICATION] + [BOUNDARY_LEAF] * 5)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("alpha", ALPHAS)
def test_raster_oracle(seed, alpha):
    p = build_packing(random_tree(4 + seed, seed), BuildConfig(alpha=alpha))
    far_pixel, far_tree = raster_cut_locus(p)
    assert far_pixel <= 1.0 and far_tree <= 1.0


def test_raster_oracle_demos(fig3_tree, fig4_tree, fig5_tree):
    for p in demo_packings(fig3_tree, fig4_tree, fig5_tree):
        assert max(raster_cut_locus(p)) <= 1.0


@given(st.integers(3, 16), st.integers(0, 5000), st.sampled_from(ALPHAS))
def test_cells_tile_the_polygon(n, seed, alpha):
    p = build_packing(random_tree(n, seed), BuildConfig(alpha=alpha))
    poly = p.boundary_points
    sites = np.unique(p.x_images, axis=0)
    total = sum(polygon_area(voronoi_cell(i, sites, poly)) for i in range(len(sites)))
    assert total == pytest.approx(polygon_area(poly), rel=1e-8)


def test_coincident_sites_rejected():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    with pytest.raises(ValueError):
        voronoi_cell(0, [[0.5, 0.5], [0.5, 0.5]], sq)


@given(st.integers(3, 14), st.integers(0, 5000), st.sampled_from(ALPHAS))
def test_round_trip_property(n, seed, alpha):
    t = random_tree(n, seed)
    p = build_packing(t, BuildConfig(alpha=alpha))
    m = match_tree(extract_ridge(p), t, p.node_pos)
    assert m.isomorphic, m.reason
    assert m.max_length_error < 1e-6
    assert sorted(m.node_correspondence.values()) == list(range(len(t)))


def test_mirror_image_matches_and_is_flagged(fig5_tree):
    p = build_packing(fig5_tree, BuildConfig(lambda_value=5))
    flip = np.array([-1.0, 1.0])
    mirrored = p.with_geometry(node_pos=p.node_pos * flip, x_images=p.x_images * flip)
    mirrored = replace(mirrored, boundary=p.boundary[::-1].copy())
    m = match_tree(extract_ridge(mirrored), p.tree, mirrored.node_pos)
    assert m.isomorphic and m.orientation == "mirrored"


def test_wrong_weight_is_a_mismatch(fig5_tree):
    p = build_packing(fig5_tree, BuildConfig(lambda_value=5))
    w = p.tree.weight.copy()
    w[4] *= 1.01
    liar = p.with_geometry(tree=LengthTree(p.tree.parent, w, p.tree.labels))
    m = match_tree(extract_ridge(liar), liar.tree)
    assert not m.isomorphic and "length" in m.reason
    o = bisector_oracle(liar)
    assert not o.ok and o.max_length_error > 1e-3


def test_wrong_shape_is_a_mismatch(fig5_tree):
    p = build_packing(fig5_tree, BuildConfig(lambda_value=5))
    r = extract_ridge(p)
    other = star([1.0] * 8)
    assert not match_tree(r, other).isomorphic


def test_moved_image_fails_both_checks(fig5_tree):
    p = build_packing(fig5_tree, BuildConfig(lambda_value=5))
    x = p.x_images.copy()
    x[2] += (0.05, -0.03)
    bad = p.with_geometry(x_images=x)
    assert not bisector_oracle(bad).ok
    try:
        m = match_tree(extract_ridge(bad), bad.tree, bad.node_pos)
        assert not m.isomorphic
    except Exception as exc:  # extraction may also refuse outright
        assert "tree" in str(exc) or "Voronoi" in str(exc)


def test_degree_four_vertex():
    p = build_packing(star([1.0, 1.0, 1.0, 1.0]), BuildConfig())
    r = extract_ridge(p)
    deg = sorted(len(e) for e in r.embedding)
    assert deg == [1, 1, 1, 1, 4]
    assert match_tree(r, p.tree, p.node_pos).isomorphic


def test_ridge_json(fig3_tree):
    p = build_packing(fig3_tree, BuildConfig(alpha=math.radians(120), lambda_value=4))
    r = extract_ridge(p)
    obj = json.loads(json.dumps(r.to_json_obj()))
    assert len(obj["vertices"]) == 4 and len(obj["edges"]) == 3
    m = match_tree(r, p.tree)
    assert json.loads(json.dumps(m.to_json_obj()))["isomorphic"] is True


def test_oracle_samples():
    p = build_packing(random_tree(10, 3), BuildConfig())
    for s in (2, 16, 200):
        assert bisector_oracle(p, s).ok
