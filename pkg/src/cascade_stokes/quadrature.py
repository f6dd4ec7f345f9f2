"""Triangle and segment quadrature rules."""

import numpy as np

from .errors import ValidationError

# Symmetric (Dunavant) rules on the unit simplex; barycentric points,
# weights normalized to sum to one.
_A4 = (0.44594849091596488632, 0.09157621350977074346)
_W4 = (0.22338158967801146570, 0.10995174365532186764)
_A6 = (0.24928674517091042129, 0.06308901449150222834)
_W6 = (0.11678627572637936603, 0.05084490637020681692)
_C6 = (0.31035245103378440542, 0.05314504984481694735)
_W6C = 0.08285107561837357519


def _orbit3(a):
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _orbit6(a, b):
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]


def _build_rules():
    rules = {}
    pts = _orbit3(1.0 / 6.0)
    rules[2] = (np.array(pts), np.full(3, 1.0 / 3.0))

    pts, wts = [], []
    for a, w in zip(_A4, _W4):
        pts += _orbit3(a)
        wts += [w] * 3
    rules[4] = (np.array(pts), np.array(wts))

    pts, wts = [], []
    for a, w in zip(_A6, _W6):
        pts += _orbit3(a)
        wts += [w] * 3
    pts += _orbit6(*_C6)
    wts += [_W6C] * 6
    rules[6] = (np.array(pts), np.array(wts))
    return rules


TRIANGLE_RULES = _build_rules()


def triangle_rule(order):
    """Barycentric points (nq, 3) and weights (nq,) summing to one.

    ``order`` is the polynomial degree integrated exactly: 2, 4 or 6.
    """
    try:
        return TRIANGLE_RULES[order]
    except KeyError:
        raise ValidationError(f"unsupported triangle quadrature order {order}; use 2, 4 or 6") from None


def gauss_segment(npts):
    """Gauss-Legendre points on [0, 1] with weights summing to one."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def split_at_x1(tri, x_cut):
    """Split one triangle (3x2 array) along the line x1 = x_cut.

    Returns a list of sub-triangles covering it.  Triangles not crossed
    by the line are returned unchanged.
    """
    x = tri[:, 0]
    side = x - x_cut
    if side.min() >= 0.0 or side.max() <= 0.0:
        return [tri]
    below = [i for i in range(3) if side[i] < 0.0]
    above = [i for i in range(3) if side[i] >= 0.0]
    lone, pair = (below, above) if len(below) == 1 else (above, below)
    i = lone[0]
    j, k = pair
    pj = tri[i] + (tri[j] - tri[i]) * (side[i] / (side[i] - side[j]))
    pk = tri[i] + (tri[k] - tri[i]) * (side[i] / (side[i] - side[k]))
    pieces = [np.array([tri[i], pj, pk]), np.array([pj, tri[j], tri[k]]), np.array([pj, tri[k], pk])]
    return [p for p in pieces if abs(_signed_area(p)) > 0.0]


def _signed_area(t):
    return 0.5 * ((t[1, 0] - t[0, 0]) * (t[2, 1] - t[0, 1]) - (t[2, 0] - t[0, 0]) * (t[1, 1] - t[0, 1]))
