import numpy as np
import pytest
from conftest import const, sine_g
from hypothesis import given, settings
from hypothesis import strategies as st

from cascade_stokes import (
    StokesProblem,
    SolverConfig,
    TensorForcing,
    VectorForcing,
    build_geometry,
    build_tensor_potential_L3,
    generate_mesh,
    make_case,
    recover_pressure_constant,
    solve,
)
from cascade_stokes.errors import NonConvergence, ValidationError
from cascade_stokes.norms import p2_norms
from cascade_stokes.verify import random_smooth_data


def w12(mesh, u):
    return p2_norms(mesh, u, 2.0)[2]


def add_problems(a, pa, b, pb):
    def comb(fa, fb):
        return lambda x: a * np.asarray(fa(x)) + b * np.asarray(fb(x))

    return StokesProblem(
        pa.nu,
        VectorForcing(comb(pa.forcing.f, pb.forcing.f)),
        comb(pa.inflow_g, pb.inflow_g),
        comb(pa.outflow_h, pb.outflow_h),
    )


@pytest.fixture(scope="module")
def sine_case():
    return make_case("sine")


@pytest.mark.parametrize("mesh_name", ["small_mesh", "curved_mesh", "bladed_mesh"])
@pytest.mark.parametrize("mode", ["direct", "lifted"])
def test_zero_data(request, mesh_name, mode):
    rep = solve(request.getfixturevalue(mesh_name), StokesProblem(), SolverConfig(mode=mode))
    u, p = rep.solution.u, rep.solution.p
    assert np.abs(u).max() + np.abs(p).max() <= 1e-10
    assert rep.traction_residual == 0.0 and rep.flux_out == 0.0


@pytest.mark.parametrize("mesh_name", ["strip_mesh", "curved_mesh"])
@pytest.mark.parametrize("mode", ["direct", "lifted"])
def test_constant_flow_is_exact(request, mesh_name, mode):
    mesh = request.getfixturevalue(mesh_name)
    rep = solve(mesh, StokesProblem(inflow_g=const((1.0, 0.0))), SolverConfig(mode=mode))
    u, p = rep.solution.u, rep.solution.p
    assert np.abs(u - [1.0, 0.0]).max() <= 1e-10
    assert np.abs(p).max() <= 1e-10
    assert rep.traction_residual <= 1e-10
    assert rep.flux_in == pytest.approx(1.0, abs=1e-12)
    assert rep.flux_out == pytest.approx(1.0, abs=1e-12)
    assert abs(rep.pressure_constant) <= 1e-10


def test_pressure_shift_is_recovered(strip_mesh):
    prob = StokesProblem(inflow_g=const((1.0, 0.0)))
    sol = solve(strip_mesh, prob).solution
    assert recover_pressure_constant(sol.shifted(3.0), prob) == pytest.approx(3.0, abs=1e-10)


def test_pressure_shift_on_mms(strip_mesh, sine_case):
    prob = sine_case.problem()
    sol = solve(strip_mesh, prob).solution
    c0 = recover_pressure_constant(sol, prob)
    assert recover_pressure_constant(sol.shifted(3.0), prob) - c0 == pytest.approx(3.0, abs=1e-10)


@pytest.mark.parametrize("mesh_name", ["strip_mesh", "curved_mesh", "bladed_mesh"])
@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_mass_balance(request, mesh_name, sign):
    mesh = request.getfixturevalue(mesh_name)
    prob = random_smooth_data(3)
    g = prob.inflow_g
    prob = StokesProblem(1.0, prob.forcing, lambda x: sign * (np.asarray(g(x)) + [1.5, 0.0]), prob.outflow_h)
    rep = solve(mesh, prob)
    assert abs(rep.flux_out - rep.flux_in) <= 1e-9 * max(1.0, abs(rep.flux_in))
    if sign < 0:
        assert rep.flux_out < 0  # reverse flow is allowed and kept


@pytest.mark.parametrize("mesh_name", ["strip_mesh", "bladed_mesh"])
def test_direct_and_lifted_agree(request, mesh_name):
    mesh = request.getfixturevalue(mesh_name)
    prob = random_smooth_data(11)
    ud = solve(mesh, prob, SolverConfig(mode="direct")).solution.u
    ul = solve(mesh, prob, SolverConfig(mode="lifted")).solution.u
    assert w12(mesh, ud - ul) <= 1e-8


def test_minres_matches_direct(strip_mesh, sine_case):
    prob = sine_case.problem()
    a = solve(strip_mesh, prob).solution
    b = solve(strip_mesh, prob, SolverConfig(linear_solver="minres", tol=1e-12))
    assert b.linear_solver_stats["method"] == "minres"
    assert w12(strip_mesh, a.u - b.solution.u) <= 1e-7


def test_minres_nonconvergence(strip_mesh, sine_case):
    with pytest.raises(NonConvergence):
        solve(strip_mesh, sine_case.problem(), SolverConfig(linear_solver="minres", maxiter=1))


@pytest.mark.parametrize("kw", [dict(nu=-1.0), dict(mode="iterative"), dict(linear_solver="cg"), dict(r_values=(1.0,))])
def test_invalid_solver_config(kw):
    with pytest.raises(ValidationError):
        SolverConfig(**kw)


def test_mixed_field_invariants(bladed_mesh):
    prob = random_smooth_data(5)
    rep = solve(bladed_mesh, prob)
    sol = rep.solution
    assert rep.periodicity_residual_u == 0.0
    assert rep.periodicity_residual_p == 0.0
    d = sol.dofmap
    nodes = np.flatnonzero(d.dirichlet_mask)
    assert np.array_equal(sol.u[nodes], d.dirichlet_values[nodes])


def test_sine_case_converges(strip, sine_case):
    errs, trac, ndp = [], [], []
    for h in (0.25, 0.125, 0.0625):
        mesh = generate_mesh(strip, h)
        rep = solve(mesh, sine_case.problem())
        errs.append(p2_norms(mesh, rep.solution.u, 2.0, exact=sine_case.u, exact_grad=sine_case.grad_u)[2])
        trac.append(rep.traction_residual)
        ndp.append(rep.normal_derivative_periodicity)
    assert errs[0] > errs[1] > errs[2]
    assert np.log2(errs[1] / errs[2]) == pytest.approx(2.0, abs=0.25)
    assert trac[0] > trac[1] > trac[2]
    assert ndp[0] > ndp[2]


def test_forcing_modes_agree_under_refinement(strip, sine_case):
    gaps = []
    for h in (0.25, 0.125):
        mesh = generate_mesh(strip, h)
        prob = sine_case.problem()
        uv = solve(mesh, prob).solution.u
        pot = build_tensor_potential_L3(mesh, prob.forcing.f, geometry=strip)
        tprob = StokesProblem(prob.nu, TensorForcing(pot), prob.inflow_g, prob.outflow_h)
        ut = solve(mesh, tprob).solution.u
        gaps.append(w12(mesh, uv - ut))
    assert gaps[1] < gaps[0]


def test_determinism(bladed_mesh):
    prob = random_smooth_data(2)
    a = solve(bladed_mesh, prob)
    b = solve(bladed_mesh, prob)
    assert np.array_equal(a.solution.u, b.solution.u)
    assert np.array_equal(a.solution.p, b.solution.p)
    assert a.scalars() == b.scalars()


@settings(max_examples=6)
@given(st.floats(-4, 4), st.floats(-4, 4), st.integers(0, 10_000), st.integers(0, 10_000))
def test_linearity(a, b, s1, s2):
    mesh = generate_mesh(build_geometry(1.0, 2.0), 0.25)
    p1, p2 = random_smooth_data(s1), random_smooth_data(s2)
    r1, r2 = solve(mesh, p1).solution, solve(mesh, p2).solution
    rab = solve(mesh, add_problems(a, p1, b, p2)).solution
    scale = 1 + abs(a) + abs(b)
    assert np.abs(rab.u - (a * r1.u + b * r2.u)).max() <= 1e-8 * scale
    assert np.abs(rab.p - (a * r1.p + b * r2.p)).max() <= 1e-8 * scale


def test_report_scalars_cover_norms(small_mesh):
    rep = solve(small_mesh, StokesProblem(inflow_g=sine_g()), SolverConfig(r_values=(1.5, 4.0)))
    s = rep.scalars()
    for key in ("flux_in", "flux_out", "traction_residual", "u_W1r_r1.5", "p_Lr_r4", "solver_method"):
        assert key in s
