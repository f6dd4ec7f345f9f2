"""Taylor-Hood (P2 velocity / P1 pressure) discretization of the weak problem.

The discrete problem is: find u = u_D + v, p with

    nu (grad u, grad w) - (p, div w) = RHS(w)
                        - (q, div u) = 0

for all admissible (w, q).  Test fields vanish on the Dirichlet parts
(inflow, blade) and are periodic across the lower/upper curves.  The
right side is (f, w) for vector forcing or -(F, grad w) for tensor
forcing, minus the outflow integral of h.w (the natural form of the
traction condition -nu du/dn + p n = h).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import elements as el
from .errors import ConstraintConflict, QuadratureFailure, ValidationError
from .geometry import Tag
from .quadrature import triangle_rule

STIFFNESS_ORDER = 4
RHS_ORDER = 6
EDGE_POINTS = 4


@dataclass(frozen=True)
class VectorForcing:
    f: object  # x (..., 2) -> (..., 2)


@dataclass(frozen=True)
class TensorForcing:
    F: object  # x (..., 2) -> (..., 2, 2), row i has divergence f_i


@dataclass
class StokesProblem:
    nu: float = 1.0
    forcing: object = None
    inflow_g: object = None
    outflow_h: object = None

    def corner_mismatch(self, geometry_or_mesh):
        """|g(A+) - g(A-)| for the inflow corners of a mesh or geometry."""
        if self.inflow_g is None:
            return 0.0
        a_lo, a_hi = inflow_corners(geometry_or_mesh)
        ga = np.asarray(self.inflow_g(np.array([a_lo, a_hi])), dtype=float)
        return float(np.max(np.abs(ga[1] - ga[0])))


def inflow_corners(obj):
    if hasattr(obj, "corners"):
        c = obj.corners
        return c["A-"], c["A+"]
    verts = obj.tagged_vertices(Tag.INFLOW)
    pts = obj.vertices[verts]
    return pts[np.argmin(pts[:, 1])], pts[np.argmax(pts[:, 1])]


def _eval_vector(fun, x):
    if fun is None:
        return np.zeros(x.shape[:-1] + (2,))
    if np.isscalar(fun) or isinstance(fun, (tuple, list, np.ndarray)):
        return np.broadcast_to(np.asarray(fun, dtype=float), x.shape[:-1] + (2,)).copy()
    out = np.asarray(fun(x), dtype=float)
    return np.broadcast_to(out, x.shape[:-1] + (2,)).copy()


# ------------------------------------------------------------------ dofs


@dataclass
class DofMap:
    mesh: object
    node_coords: np.ndarray
    element_nodes: np.ndarray
    node_master: np.ndarray  # periodic fold, upper -> lower
    vertex_master: np.ndarray
    dirichlet_mask: np.ndarray  # per node (all nodes of a folded class agree)
    dirichlet_values: np.ndarray  # (nN, 2)
    free_index: np.ndarray  # per node -> free master index or -1
    pressure_index: np.ndarray  # per vertex -> pressure unknown or -1 (pinned)
    n_free_nodes: int
    n_pressure: int
    pinned_vertex: int = -1

    @property
    def n_nodes(self):
        return len(self.node_coords)

    @property
    def n_velocity_dofs(self):
        return 2 * self.n_nodes

    @property
    def n_free_velocity(self):
        return 2 * self.n_free_nodes

    @property
    def dirichlet_set(self):
        nodes = np.flatnonzero(self.dirichlet_mask)
        return np.sort(np.concatenate([2 * nodes, 2 * nodes + 1]))

    @property
    def periodic_map(self):
        """Slave -> master maps for velocity nodes and pressure vertices."""
        vel = {int(s): int(m) for s, m in enumerate(self.node_master) if s != m}
        pre = {int(s): int(m) for s, m in enumerate(self.vertex_master) if s != m}
        return vel, pre

    @property
    def reduced_dimension(self):
        return self.n_free_velocity + self.n_pressure


def _boundary_nodes(mesh, tags):
    edges = mesh.tagged_edges(*tags)
    if len(edges) == 0:
        return np.zeros(0, dtype=np.int64)
    mids = mesh.n_vertices + np.array([mesh.edge_id(int(a), int(b)) for a, b in edges], dtype=np.int64)
    return np.unique(np.concatenate([edges.ravel(), mids]))


def build_dofmap(mesh, dirichlet=None, pin_pressure=False, tol=1e-10):
    """Degree-of-freedom bookkeeping with periodic folding and Dirichlet data.

    ``dirichlet`` maps boundary tags to data: a callable x -> (..., 2), a
    constant 2-vector, or ``None`` for zero.  The default prescribes zero on
    the blade only; the solver adds the inflow data.
    """
    if dirichlet is None:
        dirichlet = {Tag.PROFILE: None}
    coords = el.node_coordinates(mesh)
    n_nodes = len(coords)
    nV = mesh.n_vertices

    vmaster = np.arange(nV)
    for lo, up in mesh.periodic_pairs:
        vmaster[up] = lo
    master = np.arange(n_nodes)
    master[:nV] = vmaster
    for elo, eup in mesh.periodic_edge_pairs:
        master[nV + eup] = nV + elo
    if np.any(master[master] != master):
        raise ConstraintConflict("periodic map has chains")

    mask = np.zeros(n_nodes, dtype=bool)
    values = np.zeros((n_nodes, 2))
    assigned = np.zeros(n_nodes, dtype=bool)
    for tag, data in dirichlet.items():
        nodes = _boundary_nodes(mesh, [tag])
        if len(nodes) == 0:
            continue
        vals = _eval_vector(data, coords[nodes])
        clash = assigned[nodes] & (np.abs(values[nodes] - vals).max(axis=1) > tol)
        if np.any(clash):
            n = nodes[np.argmax(clash)]
            raise ConstraintConflict(f"inconsistent Dirichlet values at node {n} {tuple(coords[n])}")
        values[nodes] = vals
        mask[nodes] = True
        assigned[nodes] = True

    # fold Dirichlet data through the periodic map; values of a class must agree
    mval = np.zeros((n_nodes, 2))
    mset = np.zeros(n_nodes, dtype=bool)
    for n in np.flatnonzero(mask):
        m = master[n]
        if mset[m] and np.abs(mval[m] - values[n]).max() > tol:
            raise ConstraintConflict(
                f"periodic nodes {m} and {n} carry different Dirichlet values "
                f"{tuple(mval[m])} vs {tuple(values[n])} (inflow corners need g(A-) = g(A+))"
            )
        if not mset[m]:
            mval[m] = values[n]
            mset[m] = True
    mask = mset[master]
    values = np.where(mask[:, None], mval[master], 0.0)

    free_masters = np.flatnonzero((master == np.arange(n_nodes)) & ~mask)
    fidx = np.full(n_nodes, -1, dtype=np.int64)
    fidx[free_masters] = np.arange(len(free_masters))
    free_index = np.where(mask, -1, fidx[master])

    pmasters = np.flatnonzero(vmaster == np.arange(nV))
    pinned = -1
    if pin_pressure:
        pinned = int(pmasters[0])
        pmasters = pmasters[1:]
    pidx = np.full(nV, -1, dtype=np.int64)
    pidx[pmasters] = np.arange(len(pmasters))
    pressure_index = pidx[vmaster]

    return DofMap(
        mesh=mesh,
        node_coords=coords,
        element_nodes=el.element_nodes(mesh),
        node_master=master,
        vertex_master=vmaster,
        dirichlet_mask=mask,
        dirichlet_values=values,
        free_index=free_index,
        pressure_index=pressure_index,
        n_free_nodes=len(free_masters),
        n_pressure=len(pmasters),
        pinned_vertex=pinned,
    )


def velocity_prolongation(dofmap):
    """Sparse map from free velocity unknowns to full interleaved dofs."""
    fi = dofmap.free_index
    rows, cols = [], []
    nodes = np.flatnonzero(fi >= 0)
    for c in range(2):
        rows.append(2 * nodes + c)
        cols.append(2 * fi[nodes] + c)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    return sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(dofmap.n_velocity_dofs, dofmap.n_free_velocity)
    )


def pressure_prolongation(dofmap):
    pi = dofmap.pressure_index
    rows = np.flatnonzero(pi >= 0)
    return sp.csr_matrix(
        (np.ones(len(rows)), (rows, pi[rows])), shape=(dofmap.mesh.n_vertices, dofmap.n_pressure)
    )


# ------------------------------------------------------------- operators


def _scatter(local, rows, cols, shape):
    r = np.broadcast_to(rows[:, :, None], local.shape).ravel()
    c = np.broadcast_to(cols[:, None, :], local.shape).ravel()
    return sp.coo_matrix((local.ravel(), (r, c)), shape=shape).tocsr()


def stiffness_and_divergence(mesh, nu):
    """Full (unreduced) velocity stiffness A and divergence block B.

    A couples interleaved velocity dofs; B[q, w] = -(q, div w).
    """
    bary, w = triangle_rule(STIFFNESS_ORDER)
    G = el.barycentric_gradients(mesh)
    dphi = el.p2_gradients(G, bary)  # (nT, nq, 6, 2)
    area = mesh.signed_areas
    wq = area[:, None] * w[None, :]
    K = nu * np.einsum("tq,tqad,tqbd->tab", wq, dphi, dphi)
    nodes = el.element_nodes(mesh)
    n_nodes = mesh.n_vertices + len(mesh.edges)
    nT = mesh.n_triangles
    Kv = np.zeros((nT, 12, 12))
    Kv[:, 0::2, 0::2] = K
    Kv[:, 1::2, 1::2] = K
    dofs = np.empty((nT, 12), dtype=np.int64)
    dofs[:, 0::2] = 2 * nodes
    dofs[:, 1::2] = 2 * nodes + 1
    A = _scatter(Kv, dofs, dofs, (2 * n_nodes, 2 * n_nodes))
    # -(psi_a, d phi_b / dx_c)
    Bl = -np.einsum("tq,qa,tqbc->tabc", wq, bary, dphi).reshape(nT, 3, 12)
    B = _scatter(Bl, mesh.triangles, dofs, (mesh.n_vertices, 2 * n_nodes))
    return A, B


def pressure_mass(mesh):
    bary, w = triangle_rule(2)
    wq = mesh.signed_areas[:, None] * w[None, :]
    M = np.einsum("tq,qa,qb->tab", wq, bary, bary)
    return _scatter(M, mesh.triangles, mesh.triangles, (mesh.n_vertices, mesh.n_vertices))


def load_vector(mesh, forcing, outflow_h=None):
    """Full velocity load vector for RHS(w) minus the outflow term."""
    n_nodes = mesh.n_vertices + len(mesh.edges)
    b = np.zeros(2 * n_nodes)
    nodes = el.element_nodes(mesh)
    bary, w = triangle_rule(RHS_ORDER)
    x = el.map_points(mesh, bary)
    wq = mesh.signed_areas[:, None] * w[None, :]
    if isinstance(forcing, VectorForcing):
        fx = _eval_vector(forcing.f, x)
        _check_finite(fx, "forcing f")
        phi = el.p2_values(bary)
        loc = np.einsum("tq,qa,tqc->tac", wq, phi, fx)
        for c in range(2):
            np.add.at(b, 2 * nodes + c, loc[:, :, c])
    elif isinstance(forcing, TensorForcing):
        Fx = tensor_values(forcing.F, mesh, x)
        _check_finite(Fx, "tensor forcing F")
        dphi = el.p2_gradients(el.barycentric_gradients(mesh), bary)
        loc = -np.einsum("tq,tqik,tqak->tai", wq, Fx, dphi)
        for c in range(2):
            np.add.at(b, 2 * nodes + c, loc[:, :, c])
    elif forcing is not None:
        raise ValidationError(f"unknown forcing type {type(forcing).__name__}")
    if outflow_h is not None:
        b -= outflow_functional(mesh, outflow_h)
    return b


def tensor_values(F, mesh, x):
    """Evaluate a tensor forcing at element quadrature points (nT, nq, 2, 2)."""
    if hasattr(F, "evaluate_on"):
        return F.evaluate_on(mesh, x)
    out = np.asarray(F(x), dtype=float)
    return np.broadcast_to(out, x.shape[:-1] + (2, 2))


def outflow_functional(mesh, h):
    """Vector of the boundary integrals of h . w over the outflow edges."""
    n_nodes = mesh.n_vertices + len(mesh.edges)
    out = np.zeros(2 * n_nodes)
    edges = mesh.tagged_edges(Tag.OUTFLOW)
    if len(edges) == 0:
        return out
    pts, w, length, s = el.edge_points(mesh, edges, EDGE_POINTS)
    hv = _eval_vector(h, pts)
    _check_finite(hv, "outflow data h")
    phi = el.p2_edge_values(s)  # (nq, 3)
    loc = np.einsum("e,q,qa,eqc->eac", length, w, phi, hv)
    mids = mesh.n_vertices + np.array([mesh.edge_id(int(a), int(c)) for a, c in edges])
    enodes = np.column_stack([edges[:, 0], mids, edges[:, 1]])
    for c in range(2):
        np.add.at(out, 2 * enodes + c, loc[:, :, c])
    return out


def _check_finite(a, what):
    if not np.all(np.isfinite(a)):
        raise QuadratureFailure(f"{what} is not finite at some quadrature points")


# ------------------------------------------------------------ the system


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    A: sp.csr_matrix = field(repr=False)
    B: sp.csr_matrix = field(repr=False)
    load: np.ndarray = field(repr=False)
    Pv: sp.csr_matrix = field(repr=False)
    Pp: sp.csr_matrix = field(repr=False)
    offset: np.ndarray = field(repr=False, default=None)

    def expand(self, x):
        """Full nodal velocity (nN, 2) and vertex pressure (nV,) from a reduced solution."""
        nv = self.dofmap.n_free_velocity
        u = self.Pv @ x[:nv] + self.offset
        p = self.Pp @ x[nv:]
        return u.reshape(-1, 2), p

    def restrict(self, u, p):
        """Reduced vector of a full field (inverse of ``expand`` on admissible fields)."""
        d = self.dofmap
        masters = np.flatnonzero(d.free_index >= 0)
        first = np.full(d.n_free_nodes, -1, dtype=np.int64)
        first[d.free_index[masters][::-1]] = masters[::-1]
        xv = np.asarray(u)[first].ravel()
        pm = np.flatnonzero(d.pressure_index >= 0)
        fp = np.full(d.n_pressure, -1, dtype=np.int64)
        fp[d.pressure_index[pm][::-1]] = pm[::-1]
        return np.concatenate([xv, np.asarray(p)[fp]])


def assemble(mesh, problem, dofmap, offset=None):
    """Reduced symmetric saddle-point system for ``problem`` on ``dofmap``.

    Dirichlet values are lifted out symmetrically.  ``offset`` (nodal
    velocity, shape (nN, 2)) replaces the default lift, which is the
    Dirichlet data extended by zero.
    """
    A, B = stiffness_and_divergence(mesh, problem.nu)
    load = load_vector(mesh, problem.forcing, problem.outflow_h)
    Pv = velocity_prolongation(dofmap)
    Pp = pressure_prolongation(dofmap)
    if offset is None:
        uD = dofmap.dirichlet_values.ravel().copy()
    else:
        uD = np.asarray(offset, dtype=float).ravel().copy()
    Ar = (Pv.T @ A @ Pv).tocsr()
    Br = (Pp.T @ B @ Pv).tocsr()
    K = sp.bmat([[Ar, Br.T], [Br, None]], format="csr")
    rhs = np.concatenate([Pv.T @ (load - A @ uD), -(Pp.T @ (B @ uD))])
    K.sum_duplicates()
    K.sort_indices()
    return SparseSystem(K, rhs, dofmap, A, B, load, Pv, Pp, uD)


def quadrature_integrate(mesh, integrand, order=6):
    """Integral over the mesh of ``integrand(x)`` (points (nT, nq, 2))."""
    if order not in (2, 4, 6):
        raise ValidationError("order must be 2, 4 or 6")
    return el.integrate(mesh, integrand, order)


def write_matrix_market(system, path):
    from scipy.io import mmwrite

    mmwrite(path, system.matrix)
