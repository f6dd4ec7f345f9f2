"""Divergence-free extension of the inflow data.

The extension is the velocity of an auxiliary discrete Stokes problem with
zero forcing and Dirichlet data on every non-periodic boundary part:
g on the inflow, zero on the blade and the uniform profile (Phi/tau) e1
on the outflow.  The lower/upper curves stay periodic.  The outflow
profile carries the same flux as the inflow, so the auxiliary problem is
compatible; its pressure is fixed by pinning one vertex.

The uniform profile is imposed on the outflow segment itself, not on a
neighbourhood of it: only the trace enters the weak form.
"""

from dataclasses import dataclass, field

import numpy as np

from . import elements as el
from . import norms
from .assembly import StokesProblem, assemble, build_dofmap, inflow_corners, pressure_prolongation
from .errors import IncompatibleCorners
from .geometry import Tag
from .linsolve import solve_direct

CORNER_TOL = 1e-10


def compute_flux(mesh, g, npts=4):
    """Inflow flux -int_{inflow} g.n dl with n = (-1, 0), by Gauss quadrature."""
    if g is None:
        return 0.0
    edges = mesh.tagged_edges(Tag.INFLOW)
    pts, w, length, _ = el.edge_points(mesh, edges, npts)
    gv = np.asarray(g(pts), dtype=float)
    gv = np.broadcast_to(gv, pts.shape)
    return float(np.sum(length[:, None] * w[None, :] * gv[..., 0]))


def trace_flux(mesh, u, tag):
    """Exact flux int u.n dl of a nodal P2 field through the tagged edges."""
    edges = mesh.tagged_edges(tag)
    if len(edges) == 0:
        return 0.0
    tri, n, _ = el.boundary_edge_geometry(mesh, edges)
    mids = mesh.n_vertices + np.array([mesh.edge_id(int(a), int(b)) for a, b in edges])
    length = np.linalg.norm(mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]], axis=1)
    un = np.einsum("eac,ec->ea", np.stack([u[edges[:, 0]], u[mids], u[edges[:, 1]]], axis=1), n)
    # Simpson's rule integrates the quadratic trace exactly
    return float(np.sum(length / 6.0 * (un[:, 0] + 4.0 * un[:, 1] + un[:, 2])))


@dataclass
class LiftField:
    mesh: object
    values: np.ndarray  # nodal P2 velocity (nN, 2)
    flux: float  # flux of the interpolated inflow trace
    flux_data: float  # quadrature flux of g itself
    tau: float
    mode: str = "auxiliary-stokes"
    r: float = 2.0
    stability_constant: float = float("nan")
    g: object = field(default=None, repr=False)

    def residuals(self):
        """The five structural residuals plus the flux identity."""
        mesh = self.mesh
        coords = el.node_coordinates(mesh)
        u = self.values
        out = {}
        nodes = _tag_nodes(mesh, Tag.INFLOW)
        gv = np.zeros((len(nodes), 2)) if self.g is None else np.broadcast_to(self.g(coords[nodes]), (len(nodes), 2))
        out["inflow_trace"] = _maxabs(u[nodes] - gv)
        nodes = _tag_nodes(mesh, Tag.PROFILE)
        out["profile_trace"] = _maxabs(u[nodes]) if len(nodes) else 0.0
        out["periodicity"] = periodicity_residual(mesh, u)
        nodes = _tag_nodes(mesh, Tag.OUTFLOW)
        out["outflow_trace"] = _maxabs(u[nodes] - np.array([self.flux / self.tau, 0.0]))
        out["divergence"] = weak_divergence_residual(mesh, u)
        out["flux_identity"] = abs(trace_flux(mesh, u, Tag.OUTFLOW) - self.flux)
        return out

    def norm(self, r=2.0):
        return norms.p2_norms(self.mesh, self.values, r)[2]


def _maxabs(a):
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0


def _tag_nodes(mesh, tag):
    edges = mesh.tagged_edges(tag)
    if len(edges) == 0:
        return np.zeros(0, dtype=np.int64)
    mids = mesh.n_vertices + np.array([mesh.edge_id(int(a), int(b)) for a, b in edges])
    return np.unique(np.concatenate([edges.ravel(), mids]))


def periodicity_residual(mesh, u):
    """Max difference of a nodal P2 field over periodic vertex and midpoint pairs."""
    pairs = mesh.periodic_pairs
    res = _maxabs(u[pairs[:, 1]] - u[pairs[:, 0]])
    ep = mesh.periodic_edge_pairs
    if len(ep):
        nV = mesh.n_vertices
        res = max(res, _maxabs(u[nV + ep[:, 1]] - u[nV + ep[:, 0]]))
    return res


def weak_divergence_residual(mesh, u):
    """max_q |(div u, q)| over the periodic P1 basis."""
    from .assembly import stiffness_and_divergence

    _, B = stiffness_and_divergence(mesh, 1.0)
    dm = build_dofmap(mesh, {})
    Pp = pressure_prolongation(dm)
    return _maxabs(Pp.T @ (B @ u.ravel()))


def build_lift(mesh, g, r=2.0):
    """Discrete divergence-free extension of the inflow data ``g``.

    ``g`` maps points (..., 2) to velocities (..., 2); ``None`` means zero.
    """
    a_lo, a_hi = inflow_corners(mesh)
    if g is not None:
        ga = np.asarray(g(np.array([a_lo, a_hi])), dtype=float)
        if np.abs(ga[1] - ga[0]).max() > CORNER_TOL:
            raise IncompatibleCorners(f"g(A-) = {tuple(ga[0])} differs from g(A+) = {tuple(ga[1])}")
    tau = mesh.tau
    dm0 = build_dofmap(mesh, {Tag.INFLOW: g, Tag.PROFILE: None})
    # flux of the discrete (interpolated) inflow trace; keeps the problem compatible
    phi_h = -trace_flux(mesh, dm0.dirichlet_values, Tag.INFLOW)
    dofmap = build_dofmap(
        mesh,
        {Tag.INFLOW: g, Tag.PROFILE: None, Tag.OUTFLOW: (phi_h / tau, 0.0)},
        pin_pressure=True,
    )
    system = assemble(mesh, StokesProblem(nu=1.0), dofmap)
    x, _ = solve_direct(system.matrix, system.rhs, dofmap.n_free_velocity)
    u, _ = system.expand(x)
    lift = LiftField(mesh, u, phi_h, compute_flux(mesh, g), tau, r=r, g=g)
    lift.stability_constant = stability_constant(lift, r)
    return lift


def inflow_data_norm(mesh, g, r):
    """||g||_{L^r(inflow)} plus the (1 - 1/r, r) seminorm of g on the inflow."""
    if g is None:
        return 0.0
    lr = norms.boundary_lr(mesh, Tag.INFLOW, lambda x: np.broadcast_to(g(x), x.shape), r)
    edges = norms.segment_edges(mesh, Tag.INFLOW)
    breaks = np.concatenate([mesh.vertices[edges[:, 0], 1], mesh.vertices[edges[-1:, 1], 1]])

    def on_segment(y):
        pts = np.stack([np.zeros_like(y), y], axis=-1)
        return np.broadcast_to(g(pts), pts.shape)

    return lr + norms.gagliardo_seminorm(on_segment, breaks, r)


def stability_constant(lift, r=2.0):
    """||lift||_{1,r} divided by the boundary norm of g (nan for zero data)."""
    data = inflow_data_norm(lift.mesh, lift.g, r)
    if data == 0.0:
        return float("nan")
    return lift.norm(r) / data
