"""End-to-end solve, pressure normalization and a posteriori diagnostics.

Outflow traction convention: T(u, p) = -nu du/dn + p n (minus F n in
tensor-forcing mode).  The "minus p" variant -nu du/dn - p n is reported
next to it as ``traction_residual_minus_p`` for comparison.
"""

from dataclasses import dataclass, field

import numpy as np

from . import elements as el
from . import norms
from .assembly import (
    StokesProblem,
    TensorForcing,
    assemble,
    build_dofmap,
    pressure_mass,
    tensor_values,
    _eval_vector,
)
from .errors import ValidationError
from .geometry import Tag
from .lift import build_lift, compute_flux, periodicity_residual, trace_flux
from .linsolve import solve_direct, solve_minres

EDGE_POINTS = 4


@dataclass
class SolverConfig:
    nu: float = None  # overrides problem.nu when set
    mode: str = "direct"  # direct | lifted
    linear_solver: str = "direct"  # direct | minres
    tol: float = 1e-10
    maxiter: int = 5000
    r_values: tuple = (2.0,)

    def __post_init__(self):
        if self.nu is not None and not self.nu > 0:
            raise ValidationError("viscosity nu must be positive")
        if self.mode not in ("direct", "lifted"):
            raise ValidationError(f"unknown solve mode {self.mode!r}")
        if self.linear_solver not in ("direct", "minres"):
            raise ValidationError(f"unknown linear solver {self.linear_solver!r}")
        if any(not r > 1 for r in self.r_values):
            raise ValidationError("norm exponents r must exceed 1")


@dataclass
class MixedField:
    mesh: object
    dofmap: object
    u: np.ndarray  # (nN, 2) nodal P2 velocity
    p: np.ndarray  # (nV,) vertex P1 pressure

    def shifted(self, c):
        """Copy with the pressure shifted by a constant."""
        return MixedField(self.mesh, self.dofmap, self.u.copy(), self.p + c)


@dataclass
class SolveReport:
    solution: MixedField
    flux_in: float
    flux_in_data: float
    flux_out: float
    pressure_constant: float
    traction_residual: float
    traction_residual_minus_p: float
    periodicity_residual_p: float
    periodicity_residual_u: float
    normal_derivative_periodicity: float
    norms: dict = field(default_factory=dict)
    linear_solver_stats: dict = field(default_factory=dict)

    def scalars(self):
        """Flat ordered mapping of every scalar field (for key=value and CSV output)."""
        out = {
            "flux_in": self.flux_in,
            "flux_in_data": self.flux_in_data,
            "flux_out": self.flux_out,
            "mass_balance": self.flux_out - self.flux_in,
            "pressure_constant": self.pressure_constant,
            "traction_residual": self.traction_residual,
            "traction_residual_minus_p": self.traction_residual_minus_p,
            "periodicity_residual_p": self.periodicity_residual_p,
            "periodicity_residual_u": self.periodicity_residual_u,
            "normal_derivative_periodicity": self.normal_derivative_periodicity,
        }
        for r, (nu_, np_) in sorted(self.norms.items()):
            out[f"u_W1r_r{r:g}"] = nu_
            out[f"p_Lr_r{r:g}"] = np_
        for k, v in self.linear_solver_stats.items():
            out[f"solver_{k}"] = v
        return out


def _problem_with_nu(problem, config):
    if config.nu is None or config.nu == problem.nu:
        return problem
    return StokesProblem(config.nu, problem.forcing, problem.inflow_g, problem.outflow_h)


def _linear_solve(system, config, mesh, nu):
    if config.linear_solver == "direct":
        return solve_direct(system.matrix, system.rhs, system.dofmap.n_free_velocity)
    Mp = system.Pp.T @ pressure_mass(mesh) @ system.Pp
    return solve_minres(
        system.matrix,
        system.rhs,
        system.dofmap.n_free_velocity,
        pressure_mass=Mp,
        nu=nu,
        rtol=config.tol,
        maxiter=config.maxiter,
    )


def solve(mesh, problem, config=None):
    """Solve the discrete problem and return a ``SolveReport``."""
    config = config or SolverConfig()
    problem = _problem_with_nu(problem, config)
    if not problem.nu > 0:
        raise ValidationError("viscosity nu must be positive")
    if config.mode == "direct":
        dofmap = build_dofmap(mesh, {Tag.INFLOW: problem.inflow_g, Tag.PROFILE: None})
        system = assemble(mesh, problem, dofmap)
    else:
        lift = build_lift(mesh, problem.inflow_g)
        dofmap = build_dofmap(mesh, {Tag.INFLOW: None, Tag.PROFILE: None})
        system = assemble(mesh, problem, dofmap, offset=lift.values)
    x, stats = _linear_solve(system, config, mesh, problem.nu)
    u, p = system.expand(x)
    sol = MixedField(mesh, dofmap, u, p)
    return diagnostics(sol, problem, r_values=config.r_values, stats=stats)


# --------------------------------------------------------------- traction


def _outflow_sampling(mesh):
    edges = mesh.tagged_edges(Tag.OUTFLOW)
    tri, n, local = el.boundary_edge_geometry(mesh, edges)
    pts, w, length, s = el.edge_points(mesh, edges, EDGE_POINTS)
    bary = el.edge_barycentric(local, s)
    return edges, tri, n, pts, length[:, None] * w[None, :], bary


def _normal_derivative(mesh, u, tri, n, bary):
    grad = el.evaluate_p2_gradient(mesh, u, bary, triangles=tri)  # (nE, nq, 2, 2)
    return np.einsum("eqcd,ed->eqc", grad, n)


def traction(solution, problem, pressure_sign=1.0):
    """Outflow traction samples: (T, h, normals, weights), each per edge and Gauss point."""
    mesh = solution.mesh
    edges, tri, n, pts, wts, bary = _outflow_sampling(mesh)
    dudn = _normal_derivative(mesh, solution.u, tri, n, bary)
    p = el.evaluate_p1(mesh, solution.p, bary, triangles=tri)
    T = -problem.nu * dudn + pressure_sign * p[..., None] * n[:, None, :]
    if isinstance(problem.forcing, TensorForcing):
        F = _tensor_on_edges(problem.forcing.F, mesh, pts, tri)
        T = T - np.einsum("eqik,ek->eqi", F, n)
    h = _eval_vector(problem.outflow_h, pts)
    return T, h, n, wts


def _tensor_on_edges(F, mesh, pts, tri):
    if hasattr(F, "evaluate_on"):
        return F.evaluate_on(mesh, pts, triangles=tri)
    return tensor_values(F, mesh, pts)


def recover_pressure_constant(solution, problem):
    """Mean normal traction mismatch (1/tau) int_{outflow} (T(u, p) - h).n dl.

    Subtracting it from the pressure restores the outflow normalization.
    """
    T, h, n, wts = traction(solution, problem)
    mism = np.einsum("eqc,ec->eq", T - h, n)
    length = float(np.sum(wts))
    return float(np.sum(wts * mism)) / length


def _l2_boundary(values, wts):
    return float(np.sqrt(np.sum(wts[..., None] * values**2)))


def normal_derivative_periodicity(solution):
    """L2 norm over the lower curve of du/dn(x + tau e2) + du/dn(x)."""
    mesh = solution.mesh
    ep = mesh.periodic_edge_pairs
    if len(ep) == 0:
        return 0.0
    partner = dict((int(a), int(b)) for a, b in mesh.periodic_pairs)
    lower = mesh.edges[ep[:, 0]]
    upper = np.array([[partner[int(a)], partner[int(b)]] for a, b in lower])
    vals = []
    for edges in (lower, upper):
        tri, n, local = el.boundary_edge_geometry(mesh, edges)
        pts, w, length, s = el.edge_points(mesh, edges, EDGE_POINTS)
        bary = el.edge_barycentric(local, s)
        vals.append(_normal_derivative(mesh, solution.u, tri, n, bary))
    wts = length[:, None] * w[None, :]
    return _l2_boundary(vals[0] + vals[1], wts)


def diagnostics(solution, problem, r_values=(2.0,), stats=None):
    """Fill every ``SolveReport`` diagnostic for a solved field."""
    mesh = solution.mesh
    T, h, n, wts = traction(solution, problem)
    Tm, _, _, _ = traction(solution, problem, pressure_sign=-1.0)
    c = recover_pressure_constant(solution, problem)
    pairs = mesh.periodic_pairs
    p_per = float(np.abs(solution.p[pairs[:, 1]] - solution.p[pairs[:, 0]]).max()) if len(pairs) else 0.0
    norm_table = {}
    for r in r_values:
        r = float(r)
        norm_table[r] = (norms.p2_norms(mesh, solution.u, r)[2], norms.p1_norm(mesh, solution.p, r))
    return SolveReport(
        solution=solution,
        flux_in=-trace_flux(mesh, solution.u, Tag.INFLOW),
        flux_in_data=compute_flux(mesh, problem.inflow_g),
        flux_out=trace_flux(mesh, solution.u, Tag.OUTFLOW),
        pressure_constant=c,
        traction_residual=_l2_boundary(T - h, wts),
        traction_residual_minus_p=_l2_boundary(Tm - h, wts),
        periodicity_residual_p=p_per,
        periodicity_residual_u=periodicity_residual(mesh, solution.u),
        normal_derivative_periodicity=normal_derivative_periodicity(solution),
        norms=norm_table,
        linear_solver_stats=dict(stats or {}),
    )
