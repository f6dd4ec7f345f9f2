import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cascade_stokes.assembly import quadrature_integrate
from cascade_stokes.errors import ValidationError
from cascade_stokes.quadrature import gauss_segment, split_at_x1, triangle_rule


def _area(t):
    (x0, y0), (x1, y1), (x2, y2) = t
    return 0.5 * abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def _exact_monomial(a, b):
    # int over the unit simplex of x^a y^b
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("order", [2, 4, 6])
def test_rule_weights_sum_to_one(order):
    bary, w = triangle_rule(order)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(bary.sum(axis=1), 1.0, atol=1e-15)


@given(st.sampled_from([2, 4, 6]), st.integers(0, 6), st.integers(0, 6))
def test_rule_exact_up_to_its_order(order, a, b):
    if a + b > order:
        return
    bary, w = triangle_rule(order)
    x, y = bary[:, 1], bary[:, 2]
    approx = 0.5 * np.sum(w * x**a * y**b)
    assert approx == pytest.approx(_exact_monomial(a, b), rel=1e-13, abs=1e-16)


def test_unsupported_order():
    with pytest.raises(ValidationError):
        triangle_rule(3)


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_gauss_segment_exactness(n):
    s, w = gauss_segment(n)
    for k in range(2 * n):
        assert np.sum(w * s**k) == pytest.approx(1.0 / (k + 1), rel=1e-13)


def test_integrate_one_and_x1(small_mesh):
    assert quadrature_integrate(small_mesh, lambda x: np.ones(x.shape[:-1]), 2) == pytest.approx(2.0, abs=1e-14)
    assert quadrature_integrate(small_mesh, lambda x: x[..., 0], 2) == pytest.approx(2.0, abs=1e-14)


def test_integrate_sine_vanishes(strip_mesh):
    val = quadrature_integrate(strip_mesh, lambda x: np.sin(2 * np.pi * x[..., 1]), 6)
    assert abs(val) < 1e-12


coords = st.floats(-2.0, 2.0, allow_nan=False)


@given(st.lists(st.tuples(coords, coords), min_size=3, max_size=3), st.floats(-2.0, 2.0))
def test_split_preserves_area(pts, cut):
    tri = np.array(pts)
    area = _area(tri)
    if area < 1e-6:
        return
    pieces = split_at_x1(tri, cut)
    total = sum(_area(p) for p in pieces)
    assert total == pytest.approx(area, rel=1e-10)
    for p in pieces:
        xs = p[:, 0]
        assert xs.max() <= cut + 1e-12 or xs.min() >= cut - 1e-12
