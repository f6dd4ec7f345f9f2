import numpy as np
import pytest
from conftest import const, sine_g
from hypothesis import given, settings
from hypothesis import strategies as st

from cascade_stokes import Tag, build_lift, compute_flux, generate_mesh
from cascade_stokes.errors import IncompatibleCorners
from cascade_stokes.lift import trace_flux


def trig_g(seed, tau=1.0, modes=3):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(2, modes, 2))

    def g(x):
        y = 2 * np.pi * np.asarray(x)[..., 1] / tau
        out = np.zeros(np.asarray(x).shape)
        for c in range(2):
            for k in range(modes):
                out[..., c] += a[c, k, 0] * np.cos((k + 1) * y) + a[c, k, 1] * np.sin((k + 1) * y)
        return out

    return g


def assert_invariants(lift):
    res = lift.residuals()
    scale = max(1.0, lift.norm(2.0))
    assert res["inflow_trace"] <= 1e-10
    assert res["profile_trace"] == 0.0
    assert res["periodicity"] == 0.0
    assert res["outflow_trace"] <= 1e-10
    assert res["divergence"] <= 1e-9 * scale
    assert res["flux_identity"] <= 1e-10


@pytest.mark.parametrize("g", [const((1.0, 0.0)), const((0.3, -2.0)), sine_g(), trig_g(1), trig_g(2)])
@pytest.mark.parametrize("mesh_name", ["strip_mesh", "curved_mesh", "bladed_mesh"])
def test_lift_invariants(request, mesh_name, g):
    assert_invariants(build_lift(request.getfixturevalue(mesh_name), g))


def test_flux_examples(strip_mesh):
    assert compute_flux(strip_mesh, const((1.0, 0.0))) == pytest.approx(1.0, abs=1e-14)
    assert compute_flux(strip_mesh, const((0.0, 5.0))) == 0.0
    assert abs(compute_flux(strip_mesh, sine_g())) <= 1e-12


def test_zero_data_gives_zero_lift(bladed_mesh):
    lift = build_lift(bladed_mesh, None)
    assert np.all(lift.values == 0.0)
    assert lift.flux == 0.0


def test_constant_is_reproduced(strip_mesh, curved_mesh):
    for mesh in (strip_mesh, curved_mesh):
        lift = build_lift(mesh, const((1.0, 0.0)))
        np.testing.assert_allclose(lift.values, np.broadcast_to([1.0, 0.0], lift.values.shape), atol=1e-10)


def test_sine_lift_has_zero_outflow_trace(strip_mesh):
    lift = build_lift(strip_mesh, sine_g())
    assert abs(lift.flux) <= 1e-12
    nodes = np.unique(strip_mesh.tagged_edges(Tag.OUTFLOW).ravel())
    assert np.abs(lift.values[nodes]).max() <= 1e-10
    assert lift.residuals()["divergence"] <= 1e-9


def test_outflow_flux_equals_inflow_flux(bladed_mesh):
    lift = build_lift(bladed_mesh, trig_g(7))
    assert trace_flux(bladed_mesh, lift.values, Tag.OUTFLOW) == pytest.approx(lift.flux, abs=1e-10)
    # the trace flux converges to the data flux
    assert abs(lift.flux - lift.flux_data) < 1e-3


def test_incompatible_corners(strip_mesh):
    with pytest.raises(IncompatibleCorners):
        build_lift(strip_mesh, lambda x: np.stack([x[..., 1], 0 * x[..., 1]], axis=-1))


@settings(max_examples=8)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
def test_linearity(a, b, seed):
    from cascade_stokes import build_geometry

    mesh = generate_mesh(build_geometry(1.0, 2.0), 0.25)
    g1, g2 = trig_g(seed), sine_g()
    l1, l2 = build_lift(mesh, g1), build_lift(mesh, g2)
    lab = build_lift(mesh, lambda x: a * g1(x) + b * g2(x))
    scale = 1 + abs(a) + abs(b)
    np.testing.assert_allclose(lab.values, a * l1.values + b * l2.values, atol=1e-8 * scale)


def test_stability_constant_logged(strip_mesh):
    lift = build_lift(strip_mesh, sine_g())
    assert np.isfinite(lift.stability_constant) and lift.stability_constant > 0
