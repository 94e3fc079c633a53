import json
import math
from fractions import Fraction

import numpy as np
import pytest
import shapely
from hypothesis import assume, given, strategies as st

from cutlocus import BuildConfig, build_packing, star, validate
from cutlocus.geometry import orient2d, orient2d_many, points_in_polygon, polygon_area, segments_intersect
from cutlocus.tree import random_tree
from cutlocus.validator import (_simple_geos, check_gluing, check_polygon_simple, cup_angles,
                                polygon_is_simple, predicted_vertices)

from conftest import ALPHAS

TWO_PI = 2 * math.pi
coord = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord)


def exact_orient(a, b, c):
    ax, ay, bx, by, cx, cy = map(Fraction, (*a, *b, *c))
    d = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (d > 0) - (d < 0)


@given(point, point, point)
def test_orient2d_is_exact(a, b, c):
    assert orient2d(a, b, c) == exact_orient(a, b, c)


@given(point, point, st.floats(0, 1), st.integers(-3, 3))
def test_orient2d_near_collinear(a, b, t, ulps):
    # a point on segment ab nudged by a few ulps: the float determinant is unreliable here
    c = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
    c = (c[0], float(np.nextafter(c[1], np.inf if ulps > 0 else -np.inf)) if ulps else c[1])
    assert orient2d(a, b, c) == exact_orient(a, b, c)
    got = orient2d_many(np.array([a]), np.array([b]), np.array([c]))
    assert got[0] == exact_orient(a, b, c)


@given(point, point, point, point)
def test_segments_intersect_matches_shapely(p1, p2, q1, q2):
    assume(p1 != p2 and q1 != q2)
    expect = shapely.LineString([p1, p2]).intersects(shapely.LineString([q1, q2]))
    assert segments_intersect(p1, p2, q1, q2) == expect


@given(st.lists(point, min_size=4, max_size=9, unique=True))
def test_simplicity_matches_geos(pts):
    pts = np.array(pts)
    assume(abs(polygon_area(pts)) > 1e-3)
    ring = shapely.LinearRing(pts)
    assert polygon_is_simple(pts).simple == bool(shapely.is_simple(ring))


def test_points_in_polygon():
    sq = np.array([[0, 0], [2, 0], [2, 2], [0, 2]], float)
    assert points_in_polygon(np.array([[1, 1], [3, 1], [1, -0.5]]), sq).tolist() == [True, False, False]


@pytest.mark.parametrize("seed", range(40))
def test_random_packings_validate(seed):
    t = random_tree(3 + seed % 25, seed)
    for alpha in ALPHAS:
        p = build_packing(t, BuildConfig(alpha=alpha))
        r = validate(p)
        assert r.agt_ok, r.summary()
        assert abs(r.gauss_bonnet_sum - 4 * math.pi) < 1e-8
        leaves = int(t.is_leaf.sum())
        expect = leaves + (p.theta_x < TWO_PI - 1e-9) + (alpha < TWO_PI - 1e-9)
        assert r.predicted_vertices == expect
        assert all(v >= -1e-12 for v in r.curvatures.values())


def test_geos_and_brute_force_agree():
    t = random_tree(400, 5)
    p = build_packing(t, BuildConfig())
    pts = p.boundary_points
    assert polygon_is_simple(pts).simple and _simple_geos(pts).simple
    bad = pts.copy()
    bad[[10, 200]] = bad[[200, 10]]
    assert not polygon_is_simple(bad).simple and not _simple_geos(bad).simple


def test_large_packing_uses_geos():
    p = build_packing(random_tree(2000, 1), BuildConfig())
    r = check_polygon_simple(p)
    assert r.simple and r.method == "geos"


def test_moved_image_breaks_gluing(fig5_tree):
    p = build_packing(fig5_tree, BuildConfig(lambda_value=5))
    x = p.x_images.copy()
    x[3] += (1e-3, 0)
    bad = p.with_geometry(x_images=x)
    g = check_gluing(bad)
    assert not g.ok and g.worst > 1e-4
    assert not validate(bad).agt_ok


def test_moved_node_breaks_gluing(fig5_tree):
    p = build_packing(fig5_tree, BuildConfig(lambda_value=5))
    pos = p.node_pos.copy()
    pos[5] *= 1.01
    assert not validate(p.with_geometry(node_pos=pos)).glue_ok


def test_self_intersection_detected(fig4_tree):
    p = build_packing(fig4_tree, BuildConfig(alpha=math.radians(270), lambda_value=6))
    x = p.x_images.copy()
    x[2] = -x[2] * 3
    r = validate(p.with_geometry(x_images=x))
    assert not r.simple_polygon and r.crossing is not None


def test_theta_x_too_large():
    # 12 unit spokes with lambda = 1: far below the sufficient bound
    p = build_packing(star([1.0] * 12), BuildConfig(lambda_value=1.0))
    r = validate(p)
    assert p.theta_x > TWO_PI
    assert not r.theta_x_ok and not r.agt_ok
    assert any("2pi" in n for n in r.notes)
    assert abs(r.gauss_bonnet_sum - 4 * math.pi) < 1e-9


def test_equilateral_star_borderline():
    r = validate(build_packing(star([1.0, 1.0, 1.0]), BuildConfig(lambda_value=1.0)))
    assert r.theta_x_ok and r.theta_x_borderline
    assert r.predicted_vertices == 3


def test_cups_are_advisory():
    # unit star at full angle: the cup at each spoke opens wider than pi
    p = build_packing(star([1.0, 1.0, 1.0]), BuildConfig())
    r = validate(p)
    assert r.agt_ok and not r.cups_ok
    assert np.all(cup_angles(p) > math.pi)


def test_report_serializes(fig3_tree):
    r = validate(build_packing(fig3_tree, BuildConfig(alpha=math.radians(120), lambda_value=4)))
    obj = json.loads(json.dumps(r.to_json_obj()))
    assert obj["agt_ok"] is True and obj["predicted_vertices"] == 5
    s = r.summary()
    assert s.count("PASS") == 4 and "FAIL" not in s
    assert set(r.curvatures) == {"u", "u1", "u2", "u3", "x"}


def test_predicted_vertices_formula():
    assert predicted_vertices(8, 3.0, TWO_PI, True, 1e-9) == 9
    assert predicted_vertices(8, TWO_PI, TWO_PI, True, 1e-9) == 8
    assert predicted_vertices(5, 2.0, math.pi, False, 1e-9) == 7
