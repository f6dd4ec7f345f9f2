import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cascade_stokes import CubicCurve, EllipseProfile, SplineProfile, Tag, build_geometry, classify_boundary, generate_mesh
from cascade_stokes.errors import InvalidGeometry, NotOnBoundary


def test_flat_strip_corners(strip):
    c = strip.corners
    np.testing.assert_array_equal(c["A-"], [0.0, 0.0])
    np.testing.assert_array_equal(c["A+"], [0.0, 1.0])
    np.testing.assert_array_equal(c["B-"], [2.0, 0.0])
    np.testing.assert_array_equal(c["B+"], [2.0, 1.0])
    assert strip.area == 2.0


def test_default_delta_margin_is_tenth_of_width(strip):
    assert strip.delta_margin == pytest.approx(0.2)


def test_smoothness_metadata_is_recorded(bladed):
    assert bladed.metadata["smoothness"]["lower_curve"] == "C2"
    assert "profile" in bladed.metadata["smoothness"]


heights = st.floats(-0.3, 0.3, allow_nan=False)


@given(st.lists(heights, min_size=1, max_size=4), st.floats(0.0, 1.0), st.floats(0.5, 3.0))
def test_upper_curve_is_exact_translate(mids, t, tau):
    n = len(mids) + 1
    pts = [[0.0, 0.0]] + [[2.0 * (k + 1) / n, m] for k, m in enumerate(mids[:-1])] + [[2.0, mids[-1]]]
    try:
        g = build_geometry(tau, 2.0, lower_curve=pts)
    except InvalidGeometry:
        return
    diff = g.upper(np.array(t)) - g.lower_curve(np.array(t))
    assert diff[0] == 0.0
    assert diff[1] == pytest.approx(tau, abs=1e-15 * tau)
    up = g.upper_curve(np.array(t))
    assert np.array_equal(up, g.upper(np.array(t)))


def test_curved_strip_area_is_tau_times_d(curved_mesh):
    assert curved_mesh.area == pytest.approx(2.0, rel=1e-12)


def test_ellipse_area_by_mesh_quadrature(bladed):
    mesh = generate_mesh(bladed, 0.05)
    exact = 2.0 - math.pi * 0.03
    assert bladed.area == pytest.approx(exact, rel=1e-14)
    assert mesh.area == pytest.approx(exact, rel=1e-3)


@pytest.mark.parametrize(
    "point,tag",
    [
        ((0.0, 0.5), Tag.INFLOW),
        ((2.0, 0.5), Tag.OUTFLOW),
        ((0.0, 0.0), Tag.INFLOW),
        ((0.0, 1.0), Tag.INFLOW),
        ((2.0, 0.0), Tag.OUTFLOW),
        ((2.0, 1.0), Tag.OUTFLOW),
        ((1.0, 0.0), Tag.LOWER),
        ((1.0, 1.0), Tag.UPPER),
    ],
)
def test_classify_boundary_strip(strip, point, tag):
    assert classify_boundary(strip, point) == tag


def test_classify_boundary_profile(bladed):
    assert classify_boundary(bladed, (1.3, 0.5)) == Tag.PROFILE
    assert classify_boundary(bladed, (1.0, 0.6)) == Tag.PROFILE


def test_classify_interior_point_raises(strip):
    with pytest.raises(NotOnBoundary):
        classify_boundary(strip, (1.0, 0.5))


def test_classify_curved_strip(curved_strip):
    t = np.array(0.37)
    p = curved_strip.lower_curve(t)
    assert classify_boundary(curved_strip, p) == Tag.LOWER
    assert classify_boundary(curved_strip, p + [0.0, 1.0]) == Tag.UPPER


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(tau=0.0, d=2.0),
        dict(tau=1.0, d=-1.0),
        dict(tau=0.2, d=2.0, lower_curve=[[0.0, 0.0], [1.0, 0.5], [2.0, 0.0]]),
        dict(tau=1.0, d=2.0, lower_curve=[[0.0, 0.0], [1.5, 0.1], [1.0, 0.2], [2.0, 0.0]]),
        dict(tau=1.0, d=2.0, lower_curve=[[0.1, 0.0], [2.0, 0.0]]),
        dict(tau=1.0, d=2.0, profile=EllipseProfile((0.1, 0.5), (0.3, 0.1))),
        dict(tau=1.0, d=2.0, profile=EllipseProfile((1.0, 0.05), (0.3, 0.1))),
        dict(tau=1.0, d=2.0, profile=EllipseProfile((1.0, 0.5), (0.3, 0.45))),
    ],
)
def test_invalid_geometries(kwargs):
    with pytest.raises(InvalidGeometry):
        build_geometry(**kwargs)


def test_self_intersecting_profile_rejected():
    bowtie = [[0.8, 0.3], [1.2, 0.7], [1.2, 0.3], [0.8, 0.7]]
    with pytest.raises(InvalidGeometry):
        build_geometry(1.0, 2.0, profile=bowtie)


def test_spline_profile_closed():
    prof = SplineProfile([[0.8, 0.5], [1.0, 0.4], [1.2, 0.5], [1.0, 0.6]])
    np.testing.assert_allclose(prof(np.array([0.0])), prof(np.array([1.0])), atol=1e-14)


def test_cubic_curve_interpolates_control_points():
    pts = [[0.0, 0.0], [0.5, 0.1], [1.4, -0.1], [2.0, 0.0]]
    c = CubicCurve(pts)
    np.testing.assert_allclose(c(np.linspace(0, 1, 4)), pts, atol=1e-14)
    assert np.array_equal(c(np.array([0.0, 1.0])), np.array([pts[0], pts[-1]], dtype=float))
