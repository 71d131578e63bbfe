import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull, Delaunay

from seqplan.geometry import (
    Box, Cylinder, DegenerateInput, Pose, cloud_volume, convex_hull, hull_volume,
    quat_from_axis_angle, sample_shape, transform_cloud,
)

UNIT = Box((0.5, 0.5, 0.5))


def test_unit_box_corners():
    pts = sample_shape(UNIT, Pose())
    assert pts.shape == (8, 3)
    assert {tuple(p) for p in pts} == {(x, y, z) for x in (-0.5, 0.5) for y in (-0.5, 0.5) for z in (-0.5, 0.5)}


def test_cylinder_caps():
    pts = sample_shape(Cylinder(1.0, 1.0), Pose())
    assert pts.shape == (64, 3)
    np.testing.assert_allclose(pts[:, 0] ** 2 + pts[:, 1] ** 2, 1.0, atol=1e-12)
    assert set(np.abs(pts[:, 2])) == {1.0}


def test_translated_box():
    pts = sample_shape(UNIT, Pose((1.0, 0.0, 0.0)))
    assert set(pts[:, 0]) == {0.5, 1.5}
    assert set(pts[:, 1]) == {-0.5, 0.5}


def test_pose_rejects_non_unit_quaternion():
    with pytest.raises(ValueError):
        Pose((0, 0, 0), (1.0, 0.1, 0.0, 0.0))


@pytest.mark.parametrize("bad", [(0.0, 1.0, 1.0), (-1.0, 1.0, 1.0), (1.0, 1.0)])
def test_box_rejects_bad_extents(bad):
    with pytest.raises(ValueError):
        Box(bad)


def test_cube_hull_volume():
    poly = convex_hull(sample_shape(UNIT, Pose()))
    assert hull_volume(poly) == pytest.approx(1.0, abs=1e-12)
    assert poly.is_watertight()


def test_simplex_volume():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    assert hull_volume(convex_hull(pts)) == pytest.approx(1.0 / 6.0, abs=1e-12)


def test_scaled_cube_and_long_box():
    assert hull_volume(convex_hull(sample_shape(Box((1.0, 1.0, 1.0)), Pose()))) == pytest.approx(8.0)
    assert hull_volume(convex_hull(sample_shape(Box((1.0, 0.5, 0.5)), Pose()))) == pytest.approx(2.0)


def test_ball_hull_against_monte_carlo(rng):
    d = rng.normal(size=(1000, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    pts = d * rng.uniform(0, 1, size=(1000, 1)) ** (1 / 3)
    vol = hull_volume(convex_hull(pts))
    ball = 4.0 * math.pi / 3.0
    # interior samples: the expected hull fraction at n = 1000 is about 0.864
    assert 0.84 * ball <= vol <= ball
    # independent containment oracle: Delaunay point location over the bounding box
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    probe = rng.uniform(lo, hi, size=(1_000_000, 3))
    inside = Delaunay(pts).find_simplex(probe) >= 0
    mc = inside.mean() * np.prod(hi - lo)
    assert vol == pytest.approx(mc, rel=0.01)


def test_sphere_surface_hull_fills_ball(rng):
    d = rng.normal(size=(1000, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    ball = 4.0 * math.pi / 3.0
    assert 0.9 * ball <= hull_volume(convex_hull(d)) <= ball


def test_hull_matches_scipy(rng):
    pts = rng.normal(size=(300, 3))
    assert hull_volume(convex_hull(pts)) == pytest.approx(ConvexHull(pts).volume, rel=1e-9)


def test_cylinder_hull_close_to_true_volume():
    c = Cylinder(0.1, 0.2)
    vol = cloud_volume(sample_shape(c, Pose()))
    assert abs(vol - c.volume) / c.volume < 0.007


def test_coplanar_cloud_is_degenerate():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    with pytest.raises(DegenerateInput):
        convex_hull(pts)
    assert cloud_volume(pts) == 0.0


def test_hull_deterministic(rng):
    pts = rng.normal(size=(200, 3))
    a, b = convex_hull(pts), convex_hull(pts.copy())
    assert np.array_equal(a.vertices, b.vertices) and np.array_equal(a.faces, b.faces)


def test_transform_identity_and_translation():
    pts = sample_shape(UNIT, Pose())
    p = Pose((0.3, 0.2, 0.1), tuple(quat_from_axis_angle((1, 1, 0), 0.4)))
    assert np.array_equal(transform_cloud(pts, p, p), pts)
    moved = transform_cloud(pts, Pose(), Pose((0.0, 0.0, -1.0)))
    np.testing.assert_allclose(moved[:, 2], pts[:, 2] - 1.0)


def test_transform_yaw_quarter_turn():
    q = tuple(quat_from_axis_angle((0, 0, 1), math.pi / 2))
    out = transform_cloud(np.array([[1.0, 0.0, 0.0]]), Pose(), Pose((0, 0, 0), q))
    np.testing.assert_allclose(out[0], (0.0, 1.0, 0.0), atol=1e-12)
