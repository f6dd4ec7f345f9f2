"""Manufactured solutions, error norms, convergence studies and related checks."""

import csv
import math
import os
from dataclasses import dataclass, field

import mpmath
import numpy as np
import sympy as sy
from scipy.interpolate import CubicSpline

from . import norms
from .assembly import StokesProblem, VectorForcing
from .errors import InvariantViolation, PeriodMismatch, UnknownCase, UnsupportedSegment, ValidationError
from .geometry import Tag
from .lift import inflow_data_norm
from .mesh import generate_mesh
from .solver import SolverConfig, solve

CASES = ("uniform", "sine", "corner-compatible")
ORACLE_TOL = 1e-6
ORACLE_POINTS = 20

_X1, _X2 = sy.symbols("x1 x2", real=True)


# ------------------------------------------------------------ MMS cases


def _lambdify_vector(exprs):
    fns = [sy.lambdify((_X1, _X2), e, "numpy") for e in exprs]

    def fun(x):
        x = np.asarray(x, dtype=float)
        a, b = x[..., 0], x[..., 1]
        return np.stack([np.broadcast_to(np.asarray(f(a, b), dtype=float), a.shape) for f in fns], axis=-1)

    return fun


def _lambdify_scalar(expr):
    f = sy.lambdify((_X1, _X2), expr, "numpy")

    def fun(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(f(x[..., 0], x[..., 1]), dtype=float), x.shape[:-1]).copy()

    return fun


def _lambdify_matrix(rows):
    fns = [[sy.lambdify((_X1, _X2), e, "numpy") for e in row] for row in rows]

    def fun(x):
        x = np.asarray(x, dtype=float)
        a, b = x[..., 0], x[..., 1]
        return np.stack(
            [
                np.stack([np.broadcast_to(np.asarray(f(a, b), dtype=float), a.shape) for f in row], axis=-1)
                for row in fns
            ],
            axis=-2,
        )

    return fun


@dataclass
class ManufacturedCase:
    """Exact pair (u, p) from a stream function, with the data that reproduce it.

    u = (-d psi/dx2, d psi/dx1), f = -nu lap u + grad p, g = u on the inflow,
    h = -nu du/dx1 + p e1 on the outflow (outer normal e1).
    """

    case_id: str
    nu: float
    tau: float
    d: float
    corner_compatible: bool
    expressions: dict = field(repr=False)
    u: object = field(repr=False, default=None)
    grad_u: object = field(repr=False, default=None)
    p: object = field(repr=False, default=None)
    f: object = field(repr=False, default=None)
    g: object = field(repr=False, default=None)
    h: object = field(repr=False, default=None)
    oracle_error: float = float("nan")

    def problem(self):
        return StokesProblem(self.nu, VectorForcing(self.f), self.g, self.h)

    def oracle_check(self, n_points=ORACLE_POINTS, seed=0, x2_offset=0.0):
        """Max deviation of f, h from high-precision numerical differentiation of (u, p)."""
        e = self.expressions
        u_mp = [sy.lambdify((_X1, _X2), c, "mpmath") for c in e["u"]]
        p_mp = sy.lambdify((_X1, _X2), e["p"], "mpmath")
        rng = np.random.default_rng(seed)
        pts = np.column_stack([rng.uniform(0, self.d, n_points), x2_offset + rng.uniform(0, self.tau, n_points)])
        worst = 0.0
        with mpmath.workdps(30):
            for a, b in pts:
                a, b = mpmath.mpf(float(a)), mpmath.mpf(float(b))
                fd = []
                for i in range(2):
                    lap = mpmath.diff(u_mp[i], (a, b), (2, 0)) + mpmath.diff(u_mp[i], (a, b), (0, 2))
                    dp = mpmath.diff(p_mp, (a, b), (1, 0) if i == 0 else (0, 1))
                    fd.append(float(-self.nu * lap + dp))
                fx = self.f(np.array([float(a), float(b)]))
                worst = max(worst, float(np.max(np.abs(fx - np.array(fd)))))
                # traction on a vertical line through the point
                hd = [
                    float(-self.nu * mpmath.diff(u_mp[0], (a, b), (1, 0)) + p_mp(a, b)),
                    float(-self.nu * mpmath.diff(u_mp[1], (a, b), (1, 0))),
                ]
                hx = self.h(np.array([float(a), float(b)]))
                worst = max(worst, float(np.max(np.abs(hx - np.array(hd)))))
                gx = self.g(np.array([float(a), float(b)]))
                ud = np.array([float(u_mp[0](a, b)), float(u_mp[1](a, b))])
                worst = max(worst, float(np.max(np.abs(gx - ud))))
        return worst


def _case_expressions(case_id, tau, d, x2_shift, band):
    theta = 2 * sy.pi * (_X2 - x2_shift) / tau
    if case_id == "uniform":
        psi = -_X2
        p = sy.Integer(0)
    elif case_id == "sine":
        psi = tau / (2 * sy.pi) * sy.cos(theta)
        p = sy.cos(theta)
    elif case_id == "corner-compatible":
        # u1 = chi(x1) sin^3(theta) vanishes at the corner ordinates
        Psi = tau / (2 * sy.pi) * (sy.cos(theta) - sy.cos(theta) ** 3 / 3)
        if band is None:
            chi = sy.Integer(1)
        else:
            a, b = (sy.nsimplify(v) for v in band)
            chi = sy.Piecewise(
                (((a - _X1) / a) ** 4, _X1 < a),
                (sy.Integer(0), _X1 <= b),
                (((_X1 - b) / (d - b)) ** 4, True),
            )
        psi = chi * Psi
        p = chi * sy.sin(theta) ** 2 / 2
    else:
        raise UnknownCase(f"unknown case {case_id!r}; expected one of {', '.join(CASES)}")
    return psi, p


def make_case(case_id, nu=1.0, tau=1.0, d=2.0, x2_shift=0.0, band=None, check=True):
    """Build a manufactured case and run the differentiation oracle gate.

    ``band`` = (a, b) makes the "corner-compatible" case vanish for a <= x1 <= b,
    so a blade inside that band sees zero velocity.
    """
    if not nu > 0:
        raise ValidationError("viscosity nu must be positive")
    psi, p = _case_expressions(case_id, sy.nsimplify(tau), sy.nsimplify(d), sy.nsimplify(x2_shift), band)
    nu_s = sy.nsimplify(nu)
    u = [-sy.diff(psi, _X2), sy.diff(psi, _X1)]
    grad = [[sy.diff(c, v) for v in (_X1, _X2)] for c in u]
    f = [sy.simplify(-nu_s * (sy.diff(c, _X1, 2) + sy.diff(c, _X2, 2)) + sy.diff(p, v)) for c, v in zip(u, (_X1, _X2))]
    h = [-nu_s * grad[0][0] + p, -nu_s * grad[1][0]]
    ex = {"psi": psi, "u": u, "p": p, "f": f, "h": h}
    case = ManufacturedCase(
        case_id=case_id,
        nu=float(nu),
        tau=float(tau),
        d=float(d),
        corner_compatible=case_id != "sine",
        expressions=ex,
        u=_lambdify_vector(u),
        grad_u=_lambdify_matrix(grad),
        p=_lambdify_scalar(p),
        f=_lambdify_vector(f),
        g=_lambdify_vector(u),
        h=_lambdify_vector(h),
    )
    if check:
        err = case.oracle_check(x2_offset=float(x2_shift))
        case.oracle_error = err
        if not err <= ORACLE_TOL:
            raise InvariantViolation(f"case {case_id!r} fails the differentiation oracle ({err:.3e})")
    return case


# -------------------------------------------------------------- norms


NORM_KINDS = ("Lr", "W1r", "Lr-boundary", "gagliardo")


@dataclass(frozen=True)
class NormSpec:
    r: float = 2.0
    kind: str = "Lr"
    segment: Tag = Tag.OUTFLOW  # boundary kinds only

    def __post_init__(self):
        if not self.r > 1:
            raise ValidationError(f"norm exponent r must exceed 1, got {self.r}")
        if self.kind not in NORM_KINDS:
            raise ValidationError(f"unknown norm kind {self.kind!r}")
        if self.kind in ("Lr-boundary", "gagliardo") and Tag(self.segment) not in (Tag.INFLOW, Tag.OUTFLOW):
            raise UnsupportedSegment(f"boundary norms live on the inflow or outflow segment, not {self.segment!r}")

    @property
    def conjugate(self):
        return math.inf if self.r == math.inf else self.r / (self.r - 1.0)


def _field_kind(mesh, field):
    if callable(field):
        return "callable"
    a = np.asarray(field)
    n_nodes = mesh.n_vertices + len(mesh.edges)
    if a.shape[0] == n_nodes:
        return "p2"
    if a.shape[0] == mesh.n_vertices:
        return "p1"
    raise ValidationError(f"field with {a.shape[0]} rows matches neither P2 ({n_nodes}) nor P1 ({mesh.n_vertices}) nodes")


def error_norm(field, spec, mesh, exact=None, exact_grad=None):
    """Norm of ``field`` (minus ``exact`` when given) of the kind in ``spec``.

    ``field`` is a nodal P2 array, a nodal P1 array, or a callable of points.
    """
    kind = _field_kind(mesh, field)
    r = spec.r
    if spec.kind in ("Lr", "W1r"):
        if kind == "p2":
            u = np.asarray(field, dtype=float)
            scalar = u.ndim == 1
            if scalar:
                u = u[:, None]
                ex = None if exact is None else (lambda x: exact(x)[..., None])
                eg = None if exact_grad is None else (lambda x: exact_grad(x)[..., None, :])
            else:
                ex, eg = exact, exact_grad
            l, _, w = norms.p2_norms(mesh, u, r, ex, eg)
            return l if spec.kind == "Lr" else w
        if spec.kind == "W1r":
            raise ValidationError("W1r norms need a nodal P2 field")
        if kind == "p1":
            return norms.p1_norm(mesh, np.asarray(field, dtype=float), r, exact)
        fun = field if exact is None else (lambda x: field(x) - exact(x))
        vals_dims = np.ndim(fun(np.zeros((1, 1, 2)))) - 2
        return norms.lr_volume(mesh, fun, r, value_dims=max(vals_dims, 0))
    tag = Tag(spec.segment)
    if kind == "p2":
        trace, breaks = norms.p2_trace(mesh, np.asarray(field, dtype=float), tag)
        x1 = float(mesh.vertices[norms.segment_edges(mesh, tag)[0, 0], 0])

        def on_segment(y):
            v = trace(y)
            if exact is not None:
                v = v - exact(np.stack([np.full_like(y, x1), y], axis=-1))
            return v

    elif kind == "callable":
        edges = norms.segment_edges(mesh, tag)
        x1 = float(mesh.vertices[edges[0, 0], 0])
        breaks = np.concatenate([mesh.vertices[edges[:, 0], 1], mesh.vertices[edges[-1:, 1], 1]])

        def on_segment(y):
            pts = np.stack([np.full_like(y, x1), y], axis=-1)
            v = np.asarray(field(pts), dtype=float)
            if exact is not None:
                v = v - exact(pts)
            return v

    else:
        raise ValidationError("boundary norms need a nodal P2 field or a callable")
    if spec.kind == "gagliardo":
        return norms.gagliardo_seminorm(on_segment, breaks, r)
    return _segment_lr(on_segment, breaks, r)


def _segment_lr(w, breaks, r, npts=norms.EDGE_POINTS):
    from .quadrature import gauss_segment

    s, ws = gauss_segment(npts)
    lo, hi = breaks[:-1], breaks[1:]
    y = (lo[:, None] + (hi - lo)[:, None] * s[None, :]).ravel()
    wy = ((hi - lo)[:, None] * ws[None, :]).ravel()
    v = np.asarray(w(y), dtype=float)
    return norms.lr_from_values(wy, v, r, v.ndim - 1)


def fractional_seminorm(w, a, b, r, n_panels=64, npts=8):
    """(1 - 1/r, r) seminorm of a function of one variable on [a, b]."""
    return norms.gagliardo_seminorm(w, np.linspace(a, b, n_panels + 1), r, npts)


# ------------------------------------------------------------ studies


def _rate(e0, e1, h0, h1):
    if e0 <= 0 or e1 <= 0:
        return float("nan")
    return math.log(e0 / e1) / math.log(h0 / h1)


@dataclass
class StudyResult:
    case_id: str
    r_values: tuple
    rows: list  # one dict per level
    columns: list

    def rates(self, column):
        """Successive rates for one error column (len = levels - 1)."""
        out = []
        for a, b in zip(self.rows[:-1], self.rows[1:]):
            out.append(_rate(a[column], b[column], a["h"], b["h"]))
        return out

    def final_rate(self, column):
        return self.rates(column)[-1]

    def table(self):
        """Rows with rate columns appended (blank on the first level)."""
        err_cols = [c for c in self.columns if c.startswith("err_") or c == "traction_residual"]
        out = []
        for i, row in enumerate(self.rows):
            r = dict(row)
            for c in err_cols:
                r[f"rate_{c}"] = "" if i == 0 else self.rates(c)[i - 1]
            out.append(r)
        return out

    def write_csv(self, path):
        table = self.table()
        header = list(table[0].keys())
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for row in table:
                wr.writerow([_fmt(row[k]) for k in header])

    def write_gnuplot(self, directory, prefix="error"):
        """One two-column (h, error) file per error column; returns the paths."""
        paths = []
        for c in self.columns:
            if not (c.startswith("err_") or c == "traction_residual"):
                continue
            path = os.path.join(directory, f"{prefix}_{c}.dat")
            with open(path, "w") as fh:
                fh.write(f"# h {c}\n")
                for row in self.rows:
                    fh.write(f"{_fmt(row['h'])} {_fmt(row[c])}\n")
            paths.append(path)
        return paths


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def convergence_study(case, geometry, h_list, r_values=(2.0,), config=None, mesh_kind=None):
    """Solve the case on a family of meshes and tabulate errors and rates."""
    if len(h_list) < 3:
        raise ValidationError("a convergence study needs at least three mesh levels")
    config = config or SolverConfig()
    rows = []
    columns = ["level", "h_target", "h", "n_triangles"]
    for r in r_values:
        columns += [f"err_u_L{r:g}", f"err_u_W1_{r:g}", f"err_p_L{r:g}"]
    columns += ["traction_residual", "pressure_constant", "mass_balance"]
    for lvl, h in enumerate(h_list):
        mesh = generate_mesh(geometry, h, kind=mesh_kind)
        rep = solve(mesh, case.problem(), config)
        sol = rep.solution
        row = {"level": lvl, "h_target": float(h), "h": mesh.h, "n_triangles": mesh.n_triangles}
        for r in r_values:
            l, _, w = norms.p2_norms(mesh, sol.u, r, case.u, case.grad_u)
            row[f"err_u_L{r:g}"] = l
            row[f"err_u_W1_{r:g}"] = w
            row[f"err_p_L{r:g}"] = norms.p1_norm(mesh, sol.p, r, case.p)
        row["traction_residual"] = rep.traction_residual
        row["pressure_constant"] = rep.pressure_constant
        row["mass_balance"] = rep.flux_out - rep.flux_in
        rows.append(row)
    return StudyResult(case.case_id, tuple(r_values), rows, columns)


# ------------------------------------------------ periodic extension check


def _periodic_function(w, tau, tol):
    if callable(w):
        w0, w1 = float(np.asarray(w(np.array([0.0])))[0]), float(np.asarray(w(np.array([tau])))[0])
        scale = max(1.0, abs(w0), abs(w1))
        if abs(w1 - w0) > tol * scale:
            raise PeriodMismatch(f"w(0) = {w0} differs from w(tau) = {w1}")

        def ext(y):
            return np.asarray(w(np.mod(y, tau)), dtype=float)

        return ext
    samples = np.asarray(w, dtype=float)
    if samples.ndim != 1 or len(samples) < 4:
        raise ValidationError("samples must be a 1D array of at least 4 values on [0, tau]")
    scale = max(1.0, float(np.abs(samples).max()))
    if abs(samples[-1] - samples[0]) > tol * scale:
        raise PeriodMismatch(f"w(0) = {samples[0]} differs from w(tau) = {samples[-1]}")
    y = np.linspace(0.0, tau, len(samples))
    vals = samples.copy()
    vals[-1] = vals[0]
    spline = CubicSpline(y, vals, bc_type="periodic")
    return lambda t: spline(np.mod(t, tau))


def remark_r3_inequality_check(w, r=2.0, tau=1.0, n_panels=64, npts=8, tol=1e-10):
    """Seminorm (r-th power) of the periodic extension on [0, 2 tau] against one period.

    ``w`` is a callable on [0, tau] or uniform samples including both ends.
    Returns (lhs, rhs, ratio); ratio is 1 when both sides vanish.
    """
    if not r > 1:
        raise ValidationError("r must exceed 1")
    ext = _periodic_function(w, tau, tol)
    lhs = norms.gagliardo_double_integral(ext, np.linspace(0.0, 2 * tau, 2 * n_panels + 1), r, npts)
    rhs = norms.gagliardo_double_integral(ext, np.linspace(0.0, tau, n_panels + 1), r, npts)
    tiny = 1e-28
    if lhs <= tiny and rhs <= tiny:
        return 0.0, 0.0, 1.0
    return lhs, rhs, lhs / rhs


# ------------------------------------------------------ stability probe


def random_smooth_data(seed, tau=1.0, d=2.0, nu=1.0, n_modes=2):
    """A seeded problem with smooth, tau-periodic f, g and h (corners match)."""
    rng = np.random.default_rng(seed)

    def trig(amp):
        a = rng.normal(size=(2, n_modes, 2)) * amp
        ph = rng.uniform(0, 2 * np.pi, size=(2, n_modes, 2))
        kx = np.arange(1, n_modes + 1)

        def fun(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape)
            for c in range(2):
                for m in range(n_modes):
                    out[..., c] += a[c, m, 0] * np.cos(2 * np.pi * kx[m] * x[..., 1] / tau + ph[c, m, 0]) * np.cos(
                        np.pi * m * x[..., 0] / d + ph[c, m, 1]
                    )
                    out[..., c] += a[c, m, 1]
            return out

        return fun

    return StokesProblem(nu, VectorForcing(trig(1.0)), trig(1.0), trig(0.5))


def data_norm(mesh, problem, r):
    """||f||_r + (L^r + seminorm of g on the inflow) + ||h||_{L^r(outflow)}."""
    fpart = 0.0
    if problem.forcing is not None:
        fpart = norms.lr_volume(mesh, problem.forcing.f, r)
    gpart = inflow_data_norm(mesh, problem.inflow_g, r)
    hpart = 0.0
    if problem.outflow_h is not None:
        hpart = norms.boundary_lr(mesh, Tag.OUTFLOW, lambda x: np.broadcast_to(problem.outflow_h(x), x.shape), r)
    return fpart + gpart + hpart


def stability_probe(geometry, h_list, seeds, r_values=(1.5, 2.0, 4.0), mesh_kind=None):
    """Max over seeds of (||u||_{1,r} + ||p||_r) / data norm, per level and r.

    Returns a list of dicts {"level", "h", "r", "max_ratio"}.
    """
    out = []
    config = SolverConfig(r_values=tuple(r_values))
    for lvl, h in enumerate(h_list):
        mesh = generate_mesh(geometry, h, kind=mesh_kind)
        worst = {float(r): 0.0 for r in r_values}
        for seed in seeds:
            problem = random_smooth_data(seed, geometry.tau, geometry.d)
            rep = solve(mesh, problem, config)
            for r in r_values:
                un, pn = rep.norms[float(r)]
                worst[float(r)] = max(worst[float(r)], (un + pn) / data_norm(mesh, problem, r))
        for r in r_values:
            out.append({"level": lvl, "h": mesh.h, "r": float(r), "max_ratio": worst[float(r)]})
    return out
