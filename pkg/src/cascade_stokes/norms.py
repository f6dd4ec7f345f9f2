"""Lebesgue, Sobolev and fractional (Gagliardo) norms by quadrature."""

import numpy as np

from . import elements as el
from .errors import UnsupportedSegment
from .geometry import Tag
from .quadrature import gauss_segment, triangle_rule

VOLUME_ORDER = 6
EDGE_POINTS = 5


def _pointwise_abs(v, value_dims):
    v = np.asarray(v, dtype=float)
    if value_dims == 0:
        return np.abs(v)
    axes = tuple(range(v.ndim - value_dims, v.ndim))
    return np.sqrt(np.sum(v * v, axis=axes))


def lr_from_values(weights, values, r, value_dims=0):
    """(sum w |v|^r)^(1/r); ``weights`` broadcast against the leading axes of ``values``."""
    a = _pointwise_abs(values, value_dims)
    if np.isinf(r):
        return float(a.max()) if a.size else 0.0
    return float(np.sum(weights * a**r) ** (1.0 / r))


def volume_rule(mesh, order=VOLUME_ORDER):
    bary, w = triangle_rule(order)
    x = el.map_points(mesh, bary)
    wq = mesh.signed_areas[:, None] * w[None, :]
    return bary, x, wq


def lr_volume(mesh, fun, r, value_dims=1):
    """L^r norm over the mesh of a callable of points (nT, nq, 2)."""
    _, x, wq = volume_rule(mesh)
    return lr_from_values(wq, fun(x), r, value_dims)


def p2_norms(mesh, u, r, exact=None, exact_grad=None):
    """(||u - e||_r, ||grad(u - e)||_r, ||u - e||_{1,r}) for a nodal P2 vector field.

    ``exact``/``exact_grad`` are optional callables of points returning
    (..., 2) and (..., 2, 2) (row i = gradient of component i).
    """
    bary, x, wq = volume_rule(mesh)
    val = el.evaluate_p2(mesh, u, bary)
    grad = el.evaluate_p2_gradient(mesh, u, bary)
    if exact is not None:
        val = val - exact(x)
    if exact_grad is not None:
        grad = grad - exact_grad(x)
    l = lr_from_values(wq, val, r, 1)
    g = lr_from_values(wq, grad, r, 2)
    if np.isinf(r):
        return l, g, max(l, g)
    return l, g, (l**r + g**r) ** (1.0 / r)


def p1_norm(mesh, p, r, exact=None):
    bary, x, wq = volume_rule(mesh)
    val = el.evaluate_p1(mesh, p, bary)
    if exact is not None:
        val = val - exact(x)
    return lr_from_values(wq, val, r, 0)


# ------------------------------------------------------------- segments


def segment_edges(mesh, tag):
    """Edges of a straight boundary segment (inflow/outflow) ordered by x2."""
    if tag not in (Tag.INFLOW, Tag.OUTFLOW):
        raise UnsupportedSegment(f"fractional norms are defined on the inflow/outflow segments, not {tag!r}")
    e = mesh.tagged_edges(tag).copy()
    y = mesh.vertices[e][:, :, 1]
    swap = y[:, 0] > y[:, 1]
    e[swap] = e[swap][:, ::-1]
    order = np.argsort(mesh.vertices[e[:, 0], 1])
    return e[order]


def boundary_lr(mesh, tag, fun, r, value_dims=1):
    """L^r norm on tagged boundary edges of ``fun`` (points (nE, nq, 2))."""
    edges = mesh.tagged_edges(tag)
    pts, w, length, _ = el.edge_points(mesh, edges, EDGE_POINTS)
    return lr_from_values(length[:, None] * w[None, :], fun(pts), r, value_dims)


def p2_trace(mesh, values, tag):
    """Trace of a nodal P2 field on the inflow/outflow segment as a function of x2.

    Returns ``(trace, breakpoints)``; ``trace(y)`` evaluates at ordinates y.
    """
    edges = segment_edges(mesh, tag)
    mids = mesh.n_vertices + np.array([mesh.edge_id(int(a), int(b)) for a, b in edges])
    ya = mesh.vertices[edges[:, 0], 1]
    yb = mesh.vertices[edges[:, 1], 1]
    nodal = np.stack([values[edges[:, 0]], values[mids], values[edges[:, 1]]], axis=1)
    breaks = np.concatenate([ya, yb[-1:]])

    def trace(y):
        y = np.asarray(y, dtype=float)
        k = np.clip(np.searchsorted(breaks, y, side="right") - 1, 0, len(edges) - 1)
        s = (y - ya[k]) / (yb[k] - ya[k])
        phi = el.p2_edge_values(s).reshape(-1, 3)
        out = np.einsum("na,na...->n...", phi, nodal[k.ravel()])
        return out.reshape(y.shape + nodal.shape[2:])

    return trace, breaks


def gagliardo_double_integral(w, breakpoints, r, npts=8):
    """Double integral of |w(y) - w(z)|^r / |y - z|^r over [b0, bM]^2.

    ``w`` maps an array of ordinates to values (n,) or (n, k).  The square
    is split into panel pairs.  Off-diagonal pairs use tensor Gauss rules.
    Diagonal pairs are folded onto one triangle by symmetry and mapped with
    y = z + s, so the diagonal y = z is never sampled.
    """
    b = np.asarray(breakpoints, dtype=float)
    s, ws = gauss_segment(npts)
    lo, hi = b[:-1], b[1:]
    H = hi - lo
    nP = len(H)
    # off-diagonal: all panel pairs
    Y = (lo[:, None] + H[:, None] * s[None, :]).ravel()  # (nP*npts)
    Wy = (H[:, None] * ws[None, :]).ravel()
    vals = np.asarray(w(Y), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    vals = vals.reshape(len(Y), -1)
    total = 0.0
    panel = np.repeat(np.arange(nP), npts)
    chunk = max(1, 4_000_000 // max(1, len(Y)))
    for start in range(0, len(Y), chunk):
        sl = slice(start, start + chunk)
        diff = vals[sl, None, :] - vals[None, :, :]
        num = np.sqrt(np.sum(diff * diff, axis=-1)) ** r
        den = np.abs(Y[sl, None] - Y[None, :]) ** r
        mask = panel[sl, None] != panel[None, :]
        ratio = np.where(mask, num / np.where(mask, den, 1.0), 0.0)
        total += float(np.sum(Wy[sl, None] * Wy[None, :] * ratio))
    # diagonal panels: 2 * int_0^H ds int_lo^{hi-s} F(z+s, z) dz
    sig, zeta = np.meshgrid(s, s, indexing="ij")
    wsz = np.outer(ws, ws)
    for p in range(nP):
        ss = H[p] * sig
        z = lo[p] + (H[p] - ss) * zeta
        jac = H[p] * (H[p] - ss)
        wy = np.asarray(w((z + ss).ravel()), dtype=float).reshape(len(z.ravel()), -1)
        wz = np.asarray(w(z.ravel()), dtype=float).reshape(len(z.ravel()), -1)
        num = np.sqrt(np.sum((wy - wz) ** 2, axis=-1)) ** r
        total += 2.0 * float(np.sum(wsz.ravel() * jac.ravel() * num / ss.ravel() ** r))
    return total


def gagliardo_seminorm(w, breakpoints, r, npts=8):
    """The fractional seminorm of order (1 - 1/r, r): r-th root of the double integral."""
    return gagliardo_double_integral(w, breakpoints, r, npts) ** (1.0 / r)


def uniform_breaks(a, b, n):
    return np.linspace(a, b, n + 1)
