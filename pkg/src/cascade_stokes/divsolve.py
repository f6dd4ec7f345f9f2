"""Tensor fields with prescribed row-wise divergence.

Each row F_i solves div F_i = f_i on the filled strip (the domain with
the blade hole triangulated, f extended by zero there).  The row is the
flux sigma = grad(phi) of a mixed Poisson problem discretized with
Raviart-Thomas elements of index 1 and discontinuous linear potentials:

    (sigma, t) + (phi, div t) = 0,   (div sigma, psi) = (rhs, psi).

The normal trace of sigma is a degree of freedom, so the outflow condition
F.n = 0 is imposed exactly rather than weakly.  Since the potential space
contains the continuous linear functions, div sigma equals the local L2
projection of rhs, which makes the weak divergence identity against every
P1 test function exact up to quadrature and round-off.

Two modes:

* ``"L3"``: sigma.n = 0 on inflow and outflow, rhs = f + k d zeta'(x1)
  with k the mean of f, and F = sigma - k d zeta(x1) e1.  Since zeta
  vanishes near the outflow, F.n = 0 there.
* ``"L4"``: sigma.n = 0 on the inflow only, phi = 0 naturally on the
  outflow, rhs = f, and F = sigma.  No outflow trace guarantee.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import elements as el
from . import norms
from .errors import CompatibilityFailure, ValidationError
from .geometry import Tag
from .linsolve import solve_direct
from .mesh import fill_profile
from .quadrature import gauss_segment, split_at_x1, triangle_rule

MEAN_TOL = 1e-10
VOLUME_ORDER = 6
EDGE_POINTS = 4


# ----------------------------------------------------------------- cutoff


def _smoothstep5(t):
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def _smoothstep5_prime(t):
    return 30.0 * t * t * (1.0 - t) ** 2


@dataclass(frozen=True)
class CutoffProfile:
    """zeta(x1) = 1 - S(x1 / delta) on [0, delta], zero beyond; S the quintic smoothstep."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValidationError(f"cutoff support delta must be positive, got {self.delta}")

    def zeta(self, x1):
        t = np.clip(np.asarray(x1, dtype=float) / self.delta, 0.0, 1.0)
        return 1.0 - _smoothstep5(t)

    def dzeta(self, x1):
        x1 = np.asarray(x1, dtype=float)
        t = np.clip(x1 / self.delta, 0.0, 1.0)
        return np.where((x1 >= 0.0) & (x1 < self.delta), -_smoothstep5_prime(t) / self.delta, 0.0)

    def integral(self, mesh):
        """int zeta'(x1) dx over a mesh; equals -tau on any periodic strip."""
        rule = _split_rule(mesh, self.delta)
        return float(np.sum(rule.w * self.dzeta(rule.x[:, 0])))


def default_cutoff(mesh, geometry=None):
    """delta = (leftmost blade point) - h with a blade, else the geometry margin (d/10 by default)."""
    prof = mesh.tagged_vertices(Tag.PROFILE)
    if len(prof):
        delta = float(mesh.vertices[prof, 0].min()) - mesh.h
    elif geometry is not None and geometry.delta_margin is not None:
        delta = float(geometry.delta_margin)
    else:
        delta = float(mesh.vertices[:, 0].max()) / 10.0
    if not delta > 0:
        raise ValidationError("blade is too close to the inflow for the cutoff at this resolution")
    return CutoffProfile(delta)


# ------------------------------------------------------------- quadrature


@dataclass
class _FlatRule:
    tri: np.ndarray  # (N,) parent triangle
    bary: np.ndarray  # (N, 3) barycentric coordinates in the parent
    w: np.ndarray  # (N,) physical weights
    x: np.ndarray  # (N, 2)


def _split_rule(mesh, x_cut, order=VOLUME_ORDER):
    """Triangle rule over the whole mesh; triangles cut by x1 = x_cut are split first."""
    ref, wref = triangle_rule(order)
    P = mesh.vertices[mesh.triangles]
    xs = P[:, :, 0]
    cut = (xs.min(axis=1) < x_cut) & (xs.max(axis=1) > x_cut)
    keep = np.flatnonzero(~cut)
    nq = len(wref)
    tri = [np.repeat(keep, nq)]
    bary = [np.tile(ref, (len(keep), 1))]
    w = [(mesh.signed_areas[keep][:, None] * wref[None, :]).ravel()]
    for t in np.flatnonzero(cut):
        T = P[t]
        J = np.column_stack([T[1] - T[0], T[2] - T[0]])
        Jinv = np.linalg.inv(J)
        for piece in split_at_x1(T, x_cut):
            e1, e2 = piece[1] - piece[0], piece[2] - piece[0]
            a = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
            pts = ref @ piece
            l12 = (pts - T[0]) @ Jinv.T
            tri.append(np.full(nq, t))
            bary.append(np.column_stack([1.0 - l12.sum(axis=1), l12]))
            w.append(a * wref)
    tri = np.concatenate(tri)
    bary = np.vstack(bary)
    x = np.einsum("nk,nkd->nd", bary, P[tri])
    return _FlatRule(tri, bary, np.concatenate(w), x)


def _edge_rule(mesh, edges, x_cut, npts=EDGE_POINTS):
    """Gauss points on edges, splitting any edge crossed by x1 = x_cut.

    Returns (edge index (N,), parameter s (N,), weight in arc length (N,), points (N, 2)).
    """
    s, ws = gauss_segment(npts)
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    L = np.linalg.norm(b - a, axis=1)
    idx, ss, ww = [], [], []
    for e in range(len(edges)):
        cuts = [0.0, 1.0]
        dx = b[e, 0] - a[e, 0]
        if dx != 0.0:
            sc = (x_cut - a[e, 0]) / dx
            if 0.0 < sc < 1.0:
                cuts = [0.0, sc, 1.0]
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            idx.append(np.full(npts, e))
            ss.append(lo + (hi - lo) * s)
            ww.append((hi - lo) * L[e] * ws)
    idx = np.concatenate(idx)
    ss = np.concatenate(ss)
    pts = a[idx] + ss[:, None] * (b - a)[idx]
    return idx, ss, np.concatenate(ww), pts


# ---------------------------------------------------------------- RT1 basis


def _monomials(xi):
    """The eight local basis fields at scaled points xi (N, 2): (N, 8, 2)."""
    X, Y = xi[:, 0], xi[:, 1]
    o, z = np.ones_like(X), np.zeros_like(X)
    comp0 = np.stack([o, X, Y, z, z, z, X * X, X * Y], axis=1)
    comp1 = np.stack([z, z, z, o, X, Y, X * Y, Y * Y], axis=1)
    return np.stack([comp0, comp1], axis=-1)


def _monomial_divergence(xi, scale):
    """div of the eight basis fields (N, 8); ``scale`` is h per point."""
    X, Y = xi[:, 0], xi[:, 1]
    o, z = np.ones_like(X), np.zeros_like(X)
    return np.stack([z, o, z, z, z, o, 3 * X, 3 * Y], axis=1) / scale[:, None]


@dataclass
class _RTSpace:
    mesh: object
    centers: np.ndarray  # (nT, 2)
    scales: np.ndarray  # (nT,)
    C: np.ndarray  # (nT, 8, 8) monomial coefficients of the nodal basis
    local_dofs: np.ndarray  # (nT, 8) global index, -1 where constrained
    n_dofs: int
    edge_dof: np.ndarray  # (nEdges, 2) global index of the two edge moments, -1 if constrained
    edge_start: np.ndarray  # (nEdges,) start vertex of the global orientation


def _vertex_master(mesh):
    master = np.arange(mesh.n_vertices)
    pairs = mesh.periodic_pairs
    if len(pairs):
        master[pairs[:, 1]] = pairs[:, 0]
    return master


def _rt_space(mesh, constrained_tags):
    E = mesh.edges
    nE = len(E)
    master = _vertex_master(mesh)
    # global orientation: compare (master vertex, vertex) lexicographically, so
    # an upper edge and its lower partner share start point and normal
    ka = master[E[:, 0]] * (mesh.n_vertices + 1) + E[:, 0]
    kb = master[E[:, 1]] * (mesh.n_vertices + 1) + E[:, 1]
    start = np.where(ka < kb, E[:, 0], E[:, 1])
    rep = np.arange(nE)
    ep = mesh.periodic_edge_pairs
    if len(ep):
        rep[ep[:, 1]] = ep[:, 0]
    blocked = np.zeros(nE, dtype=bool)
    for tag in constrained_tags:
        te = mesh.tagged_edges(tag)
        if len(te):
            blocked[[mesh.edge_id(int(a), int(b)) for a, b in te]] = True
    free_reps = np.unique(rep[~blocked[rep]])
    index = -np.ones(nE, dtype=np.int64)
    index[free_reps] = np.arange(len(free_reps))
    edge_dof = -np.ones((nE, 2), dtype=np.int64)
    ok = index[rep] >= 0
    edge_dof[ok, 0] = 2 * index[rep[ok]]
    edge_dof[ok, 1] = 2 * index[rep[ok]] + 1
    n_edge = 2 * len(free_reps)

    T = mesh.triangles
    nT = len(T)
    P = mesh.vertices[T]
    centers = P.mean(axis=1)
    scales = np.max(np.linalg.norm(P - np.roll(P, 1, axis=1), axis=2), axis=1)
    V = np.empty((nT, 8, 8))
    local = np.empty((nT, 8), dtype=np.int64)
    s, ws = gauss_segment(3)
    psi = np.stack([1.0 - s, s], axis=1)  # (nq, 2)
    for k in range(3):
        e = mesh.tri_edges[:, k]
        va, vb = T[:, (k + 1) % 3], T[:, (k + 2) % 3]
        flip = start[e] != va
        A = np.where(flip[:, None], mesh.vertices[vb], mesh.vertices[va])
        B = np.where(flip[:, None], mesh.vertices[va], mesh.vertices[vb])
        t = B - A
        n = np.column_stack([t[:, 1], -t[:, 0]]) / np.linalg.norm(t, axis=1)[:, None]
        pts = A[:, None, :] + s[None, :, None] * t[:, None, :]  # (nT, nq, 2)
        xi = (pts - centers[:, None, :]) / scales[:, None, None]
        m = _monomials(xi.reshape(-1, 2)).reshape(nT, len(s), 8, 2)
        mn = np.einsum("tqbc,tc->tqb", m, n)
        V[:, 2 * k : 2 * k + 2, :] = np.einsum("q,qj,tqb->tjb", ws, psi, mn)
        local[:, 2 * k : 2 * k + 2] = edge_dof[e]
    ref, wref = triangle_rule(2)
    x = el.map_points(mesh, ref)
    xi = (x - centers[:, None, :]) / scales[:, None, None]
    m = _monomials(xi.reshape(-1, 2)).reshape(nT, len(wref), 8, 2)
    V[:, 6:8, :] = np.einsum("q,tqbc->tcb", wref, m)
    local[:, 6] = n_edge + 2 * np.arange(nT)
    local[:, 7] = n_edge + 2 * np.arange(nT) + 1
    C = np.linalg.inv(V)
    return _RTSpace(mesh, centers, scales, C, local, n_edge + 2 * nT, edge_dof, start)


def _rt_values(space, coeff, tri, x):
    """Evaluate RT fields given monomial coefficients (rows, nT, 8) at points: (rows, N, 2)."""
    xi = (x - space.centers[tri]) / space.scales[tri][:, None]
    m = _monomials(xi)
    return np.einsum("rnb,nbc->rnc", coeff[:, tri], m)


def _mixed_matrices(space):
    """Flux mass matrix and divergence matrix against discontinuous P1 (3 per triangle)."""
    mesh = space.mesh
    nT = mesh.n_triangles
    ref, wref = triangle_rule(4)
    x = el.map_points(mesh, ref)  # (nT, nq, 2)
    nq = len(wref)
    xi = ((x - space.centers[:, None, :]) / space.scales[:, None, None]).reshape(-1, 2)
    m = _monomials(xi).reshape(nT, nq, 8, 2)
    dv = _monomial_divergence(xi, np.repeat(space.scales, nq)).reshape(nT, nq, 8)
    wq = mesh.signed_areas[:, None] * wref[None, :]
    Mm = np.einsum("tq,tqbc,tqec->tbe", wq, m, m)
    Dm = np.einsum("tq,qk,tqb->tkb", wq, ref, dv)
    C = space.C
    Ml = np.einsum("tbi,tbe,tej->tij", C, Mm, C)
    Dl = np.einsum("tkb,tbj->tkj", Dm, C)
    dofs = space.local_dofs
    ok = dofs >= 0
    I = np.broadcast_to(dofs[:, :, None], Ml.shape)
    J = np.broadcast_to(dofs[:, None, :], Ml.shape)
    mask = ok[:, :, None] & ok[:, None, :]
    M = sp.coo_matrix((Ml[mask], (I[mask], J[mask])), shape=(space.n_dofs, space.n_dofs)).tocsr()
    rows = np.broadcast_to((3 * np.arange(nT))[:, None, None] + np.arange(3)[None, :, None], Dl.shape)
    cols = np.broadcast_to(dofs[:, None, :], Dl.shape)
    dmask = np.broadcast_to(ok[:, None, :], Dl.shape)
    D = sp.coo_matrix((Dl[dmask], (rows[dmask], cols[dmask])), shape=(3 * nT, space.n_dofs)).tocsr()
    return M, D


# --------------------------------------------------------------- potential


def _eval_forcing(f, x):
    out = np.asarray(f(x), dtype=float) if callable(f) else np.asarray(f, dtype=float)
    return np.broadcast_to(out, x.shape[:-1] + (2,))


@dataclass
class TensorPotential:
    """Rows F_1, F_2 (F[..., i, :] = F_i) on the flow domain, built on the filled strip."""

    mesh: object  # flow-domain mesh
    filled: object  # filled strip mesh; triangles [:n_outer] are those of ``mesh``
    n_outer: int
    space: _RTSpace = field(repr=False)
    coeff: np.ndarray = field(repr=False)  # (2, nT_filled, 8)
    k: np.ndarray  # mean of f over the filled strip
    d: float
    cutoff: CutoffProfile
    mode: str
    f: object = field(default=None, repr=False)
    mean_residual: np.ndarray = None  # relative mean of the right side before correction
    edge_moments: np.ndarray = field(default=None, repr=False)  # (2, n_dofs) solved flux dofs
    solver_stats: dict = field(default_factory=dict)

    # evaluation ---------------------------------------------------------
    def _correction(self):
        return self.mode == "L3" and np.any(self.k != 0.0)

    def values_at(self, tri, x):
        """F at points x (N, 2) lying in filled triangles ``tri`` (N,): (N, 2, 2)."""
        out = np.moveaxis(_rt_values(self.space, self.coeff, tri, x), 0, 1).copy()
        if self._correction():
            z = self.cutoff.zeta(x[:, 0])
            out[:, :, 0] -= self.k[None, :] * self.d * z[:, None]
        return out

    def evaluate_on(self, mesh, x, triangles=None):
        """F at points (..., 2) of ``mesh`` triangles (all triangles, or ``triangles`` per leading row)."""
        x = np.asarray(x, dtype=float)
        if mesh is not self.mesh and mesh != self.mesh:
            return self(x)
        if triangles is None:
            triangles = np.arange(mesh.n_triangles)
        tri = np.broadcast_to(np.asarray(triangles).reshape((-1,) + (1,) * (x.ndim - 2)), x.shape[:-1])
        vals = self.values_at(tri.ravel(), x.reshape(-1, 2))
        return vals.reshape(x.shape[:-1] + (2, 2))

    def __call__(self, x):
        """F at arbitrary points of the flow domain (nan outside)."""
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        tri = _locate(self.mesh, flat)
        out = np.full((len(flat), 2, 2), np.nan)
        inside = tri >= 0
        if np.any(inside):
            out[inside] = self.values_at(tri[inside], flat[inside])
        return out.reshape(x.shape[:-1] + (2, 2))

    # checks ---------------------------------------------------------------
    def divergence_residual(self):
        """Per row: max over P1 hats q of |int F_i.grad q - int_bdry (F_i.n) q + int f_i q|."""
        mesh = self.mesh
        rule = _split_rule(mesh, self.cutoff.delta)
        F = self.values_at(rule.tri, rule.x)  # (N, 2, 2)
        fv = _eval_forcing(self.f, rule.x) if self.f is not None else np.zeros((len(rule.w), 2))
        G = el.barycentric_gradients(mesh)[rule.tri]  # (N, 3, 2)
        vol = np.einsum("n,nic,nkc->nik", rule.w, F, G) + np.einsum("n,ni,nk->nik", rule.w, fv, rule.bary)
        R = np.zeros((2, mesh.n_vertices))
        nodes = mesh.triangles[rule.tri]
        for i in range(2):
            np.add.at(R[i], nodes, vol[:, i, :])
        edges = mesh.boundary_edges
        tri_b, n, _ = el.boundary_edge_geometry(mesh, edges)
        eidx, s, w, pts = _edge_rule(mesh, edges, self.cutoff.delta)
        Fb = self.values_at(tri_b[eidx], pts)
        flux = np.einsum("nic,nc->ni", Fb, n[eidx])
        for i in range(2):
            np.add.at(R[i], edges[eidx, 0], -w * flux[:, i] * (1.0 - s))
            np.add.at(R[i], edges[eidx, 1], -w * flux[:, i] * s)
        return np.abs(R).max(axis=1)

    def outflow_normal_trace(self):
        """max |F_i.n| at the endpoints of outflow edges, read from the trace dofs.

        The two edge moments determine the linear normal trace:
        endpoint values are (4 m0 - 2 m1, 4 m1 - 2 m0).
        """
        edges = self.mesh.tagged_edges(Tag.OUTFLOW)
        if len(edges) == 0:
            return 0.0
        ids = np.array([self.filled.edge_id(int(a), int(b)) for a, b in edges], dtype=np.int64)
        dofs = self.space.edge_dof[ids]
        m = np.where(dofs[None] >= 0, self.edge_moments[:, np.maximum(dofs, 0)], 0.0)  # (2, nE, 2)
        ends = np.stack([4 * m[..., 0] - 2 * m[..., 1], 4 * m[..., 1] - 2 * m[..., 0]], axis=-1)
        if self._correction():
            pts = self.mesh.vertices[edges]  # (nE, 2, 2)
            _, n, _ = el.boundary_edge_geometry(self.mesh, edges)
            z = self.cutoff.zeta(pts[..., 0])
            ends = np.abs(ends) + np.abs(self.k[:, None, None] * self.d * z[None] * n[None, :, 0:1])
        return float(np.abs(ends).max())

    def outflow_normal_trace_sampled(self):
        """max |F_i.n| over outflow Gauss points, evaluated from the element fields."""
        edges = self.mesh.tagged_edges(Tag.OUTFLOW)
        if len(edges) == 0:
            return 0.0
        tri_b, n, _ = el.boundary_edge_geometry(self.mesh, edges)
        eidx, _, _, pts = _edge_rule(self.mesh, edges, self.cutoff.delta)
        Fb = self.values_at(tri_b[eidx], pts)
        return float(np.abs(np.einsum("nic,nc->ni", Fb, n[eidx])).max())

    def periodicity_residual(self):
        """max difference of F_i.n across paired lower/upper edges (common normal)."""
        mesh = self.mesh
        ep = mesh.periodic_edge_pairs
        if len(ep) == 0:
            return 0.0
        s, _ = gauss_segment(EDGE_POINTS)
        vals = []
        n_ref = None
        for side in (0, 1):
            ids = ep[:, side]
            E = mesh.edges[ids]
            start = self._outer_edge_start(ids)
            end = np.where(E[:, 0] == start, E[:, 1], E[:, 0])
            a, b = mesh.vertices[start], mesh.vertices[end]
            t = b - a
            if n_ref is None:
                n_ref = np.column_stack([t[:, 1], -t[:, 0]]) / np.linalg.norm(t, axis=1)[:, None]
            pts = (a[:, None, :] + s[None, :, None] * t[:, None, :]).reshape(-1, 2)
            tri = np.repeat(mesh.edge_triangles[ids, 0], len(s))
            F = self.values_at(tri, pts).reshape(len(ids), len(s), 2, 2)
            vals.append(np.einsum("eqic,ec->eqi", F, n_ref))
        return float(np.abs(vals[1] - vals[0]).max())

    def _outer_edge_start(self, edge_ids):
        """Start vertices (global orientation) of flow-mesh edges."""
        E = self.mesh.edges[edge_ids]
        ids = np.array([self.filled.edge_id(int(a), int(b)) for a, b in E], dtype=np.int64)
        return self.space.edge_start[ids]

    def residuals(self):
        div = self.divergence_residual()
        return {
            "divergence_row1": float(div[0]),
            "divergence_row2": float(div[1]),
            "outflow_normal_trace": self.outflow_normal_trace(),
            "outflow_normal_trace_sampled": self.outflow_normal_trace_sampled(),
            "periodicity": self.periodicity_residual(),
            "mean_residual_row1": float(self.mean_residual[0]),
            "mean_residual_row2": float(self.mean_residual[1]),
        }

    def lr_norm(self, r=2.0):
        rule = _split_rule(self.mesh, self.cutoff.delta)
        return norms.lr_from_values(rule.w, self.values_at(rule.tri, rule.x), r, 2)


def _locate(mesh, pts):
    from matplotlib.tri import Triangulation

    T = Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles)
    return np.asarray(T.get_trifinder()(pts[:, 0], pts[:, 1]), dtype=np.int64)


def _build(mesh, f, cutoff, mode, geometry=None):
    if cutoff is None:
        cutoff = default_cutoff(mesh, geometry)
    prof = mesh.tagged_vertices(Tag.PROFILE)
    if len(prof) and cutoff.delta >= mesh.vertices[prof, 0].min():
        raise ValidationError("cutoff support reaches into the blade")
    filled, n_outer = fill_profile(mesh)
    d = float(mesh.vertices[:, 0].max())
    tags = (Tag.INFLOW, Tag.OUTFLOW) if mode == "L3" else (Tag.INFLOW,)
    space = _rt_space(filled, tags)
    M, D = _mixed_matrices(space)
    nT = filled.n_triangles

    rule = _split_rule(filled, cutoff.delta)
    fv = np.zeros((len(rule.w), 2))
    inside = rule.tri < n_outer
    if f is not None:
        fv[inside] = _eval_forcing(f, rule.x[inside])
    area = float(np.sum(rule.w))
    k = np.einsum("n,ni->i", rule.w, fv) / area
    rhs_vals = fv.copy()
    if mode == "L3":
        rhs_vals += k[None, :] * d * cutoff.dzeta(rule.x[:, 0])[:, None]
    R = np.zeros((2, 3 * nT))
    for i in range(2):
        np.add.at(R[i], 3 * rule.tri[:, None] + np.arange(3)[None, :], (rule.w * rhs_vals[:, i])[:, None] * rule.bary)
    total = np.abs(R).sum(axis=1)
    mean_res = np.abs(R.sum(axis=1)) / np.where(total > 0, total, 1.0)

    n_s = space.n_dofs
    if mode == "L3":
        if np.any(mean_res > MEAN_TOL):
            raise CompatibilityFailure(f"right side mean {mean_res.max():.3e} exceeds {MEAN_TOL:g} after correction")
        mass = np.repeat(filled.signed_areas / 3.0, 3)
        R -= np.outer(R.sum(axis=1), mass) / mass.sum()
        keep = np.arange(1, 3 * nT)  # pin the first potential dof
    else:
        keep = np.arange(3 * nT)
    Dk = D[keep]
    K = sp.bmat([[M, Dk.T], [Dk, None]], format="csc")
    sol = np.zeros((2, n_s))
    stats = {}
    for i in range(2):
        if not np.any(R[i]):
            continue
        b = np.concatenate([np.zeros(n_s), R[i, keep]])
        x, stats = solve_direct(K, b, n_velocity=n_s)
        sol[i] = x[:n_s]
    dl = np.where(space.local_dofs[None] >= 0, sol[:, np.maximum(space.local_dofs, 0)], 0.0)
    coeff = np.einsum("tbj,rtj->rtb", space.C, dl)
    return TensorPotential(
        mesh=mesh,
        filled=filled,
        n_outer=n_outer,
        space=space,
        coeff=coeff,
        k=k,
        d=d,
        cutoff=cutoff,
        mode=mode,
        f=f,
        mean_residual=mean_res,
        edge_moments=sol,
        solver_stats=stats,
    )


def build_tensor_potential_L3(mesh, f, cutoff=None, geometry=None):
    """F with row-wise div F = f and F.n = 0 on the outflow."""
    return _build(mesh, f, cutoff, "L3", geometry)


def build_tensor_potential_L4(mesh, f, cutoff=None, geometry=None):
    """F with row-wise div F = f; no outflow trace condition."""
    return _build(mesh, f, cutoff, "L4", geometry)


def norm_ratio(potential, r=2.0):
    """||F||_{L^r} / ||f||_{L^r} over the flow domain (nan for f = 0)."""
    fn = norms.lr_volume(potential.mesh, lambda x: _eval_forcing(potential.f, x), r)
    if fn == 0.0:
        return float("nan")
    return potential.lr_norm(r) / fn
