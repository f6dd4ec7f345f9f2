"""One spatial period of a 2D profile cascade.

The domain is bounded by the inflow segment x1 = 0, the outflow segment
x1 = d, a lower curve running from the inflow line to the outflow line,
its copy translated by (0, tau), and optionally a closed blade profile.
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .errors import InvalidGeometry, NotOnBoundary


class Tag(IntEnum):
    INFLOW = 1
    OUTFLOW = 2
    LOWER = 3
    UPPER = 4
    PROFILE = 5


TAG_NAMES = {t: t.name.capitalize() for t in Tag}
TAG_BY_NAME = {v.upper(): k for k, v in TAG_NAMES.items()}


class CubicCurve:
    """Piecewise cubic through control points, parameter t in [0, 1].

    Control points are interpolated exactly (uniform knots).  Two points
    give a straight segment.
    """

    smoothness = "C2"

    def __init__(self, control_points):
        pts = np.asarray(control_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise InvalidGeometry("curve needs at least two 2D control points")
        self.control_points = pts
        knots = np.linspace(0.0, 1.0, len(pts))
        if len(pts) == 2:
            self._spline = None
        else:
            self._spline = CubicSpline(knots, pts, bc_type="natural")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self._spline is None:
            p0, p1 = self.control_points
            return p0 + t[..., None] * (p1 - p0)
        out = self._spline(t)
        # pin endpoints to the control points bit-for-bit
        out = np.where((t == 0.0)[..., None], self.control_points[0], out)
        out = np.where((t == 1.0)[..., None], self.control_points[-1], out)
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self._spline is None:
            p0, p1 = self.control_points
            return np.broadcast_to(p1 - p0, t.shape + (2,)).copy()
        return self._spline(t, 1)

    def translated(self, shift):
        return TranslatedCurve(self, shift)


class TranslatedCurve:
    """A curve shifted by a constant vector; evaluates base(t) + shift so the copy is exact."""

    def __init__(self, base, shift):
        self.base = base
        self.shift = np.asarray(shift, dtype=float)
        self.control_points = base.control_points + self.shift
        self.smoothness = base.smoothness

    def __call__(self, t):
        return self.base(t) + self.shift

    def derivative(self, t):
        return self.base.derivative(t)

    def translated(self, shift):
        return TranslatedCurve(self.base, self.shift + np.asarray(shift, dtype=float))


class SplineProfile:
    """Closed periodic cubic through control points (first point not repeated)."""

    smoothness = "C2"

    def __init__(self, control_points):
        pts = np.asarray(control_points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
            raise InvalidGeometry("profile needs at least four 2D control points")
        self.control_points = pts
        closed = np.vstack([pts, pts[:1]])
        self._spline = CubicSpline(np.linspace(0.0, 1.0, len(closed)), closed, bc_type="periodic")

    def __call__(self, t):
        return self._spline(np.mod(t, 1.0))


class EllipseProfile:
    """Ellipse with the given center, semi-axes and rotation angle (radians)."""

    smoothness = "C-infinity"

    def __init__(self, center, semi_axes, angle=0.0):
        self.center = np.asarray(center, dtype=float)
        self.semi_axes = np.asarray(semi_axes, dtype=float)
        self.angle = float(angle)
        if np.any(self.semi_axes <= 0):
            raise InvalidGeometry("ellipse semi-axes must be positive")

    def __call__(self, t):
        s = 2.0 * np.pi * np.asarray(t, dtype=float)
        a, b = self.semi_axes
        c, sn = np.cos(self.angle), np.sin(self.angle)
        x = a * np.cos(s)
        y = b * np.sin(s)
        return np.stack([self.center[0] + c * x - sn * y, self.center[1] + sn * x + c * y], axis=-1)

    @property
    def area(self):
        return np.pi * self.semi_axes[0] * self.semi_axes[1]


def polygon_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def points_in_polygon(points, poly):
    """Even-odd rule point-in-polygon test, vectorized over points."""
    points = np.atleast_2d(points)
    x, y = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
    x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
    crosses = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(crosses & (x < xint), axis=1) % 2 == 1


def _segments_cross(poly):
    """True if a closed polyline has two non-adjacent crossing segments."""
    p = poly
    q = np.roll(poly, -1, axis=0)
    n = len(p)

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    d1 = orient(p[i], q[i], p[j])
    d2 = orient(p[i], q[i], q[j])
    d3 = orient(p[j], q[j], p[i])
    d4 = orient(p[j], q[j], q[i])
    return bool(np.any((d1 * d2 < 0) & (d3 * d4 < 0)))


_SAMPLES = 2001


@dataclass(frozen=True)
class CascadeGeometry:
    tau: float
    d: float
    lower_curve: CubicCurve
    profile: object = None
    delta_margin: float = None
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def upper_curve(self):
        return self.lower_curve.translated((0.0, self.tau))

    def upper(self, t):
        """Upper curve, evaluated as the exact translate of the lower one."""
        p = self.lower_curve(t)
        return p + np.array([0.0, self.tau])

    @property
    def corners(self):
        a_minus = self.lower_curve(np.array(0.0))
        b_minus = self.lower_curve(np.array(1.0))
        shift = np.array([0.0, self.tau])
        return {"A-": a_minus, "A+": a_minus + shift, "B-": b_minus, "B+": b_minus + shift}

    @property
    def area(self):
        """Exact area of Omega (strip area tau*d minus the profile area)."""
        a = self.tau * self.d
        if self.profile is not None:
            a -= self.profile_area()
        return a

    def profile_area(self, n=20000):
        if self.profile is None:
            return 0.0
        if hasattr(self.profile, "area"):
            return self.profile.area
        return abs(polygon_area(self.profile(np.arange(n) / n)))

    def lower_x2(self, x1):
        """Ordinate of the lower curve above abscissa x1."""
        x1 = float(x1)

        def gap(t):
            return float(self.lower_curve(np.array(t))[0]) - x1

        if x1 <= 0.0:
            t = 0.0
        elif x1 >= self.d:
            t = 1.0
        else:
            t = brentq(gap, 0.0, 1.0, xtol=1e-15)
        return float(self.lower_curve(np.array(t))[1])

    def profile_polygon(self, n):
        """Counter-clockwise polygon with n vertices sampled from the profile."""
        pts = self.profile(np.arange(n) / n)
        if polygon_area(pts) < 0:
            pts = pts[::-1].copy()
        return pts

    def profile_x1_range(self):
        pts = self.profile(np.arange(_SAMPLES) / _SAMPLES)
        return float(pts[:, 0].min()), float(pts[:, 0].max())


def build_geometry(tau, d, lower_curve=None, profile=None, delta_margin=None):
    """Validate shape parameters and return a ``CascadeGeometry``.

    ``lower_curve`` is a ``CubicCurve`` or an array of control points; the
    default is the straight segment from (0, 0) to (d, 0).  ``profile`` is
    ``None``, an ``EllipseProfile``/``SplineProfile`` or control points.
    """
    tau = float(tau)
    d = float(d)
    if not tau > 0 or not d > 0:
        raise InvalidGeometry(f"tau and d must be positive (got tau={tau}, d={d})")
    if lower_curve is None:
        lower_curve = CubicCurve([[0.0, 0.0], [d, 0.0]])
    elif not isinstance(lower_curve, CubicCurve):
        lower_curve = CubicCurve(lower_curve)
    if profile is not None and not callable(profile):
        profile = SplineProfile(profile)
    if delta_margin is None:
        delta_margin = d / 10.0
    delta_margin = float(delta_margin)
    if not delta_margin > 0:
        raise InvalidGeometry("delta_margin must be positive")

    cp = lower_curve.control_points
    if cp[0, 0] != 0.0 or cp[-1, 0] != d:
        raise InvalidGeometry("lower curve must start on x1 = 0 and end on x1 = d")
    t = np.linspace(0.0, 1.0, _SAMPLES)
    lower = lower_curve(t)
    if np.any(np.diff(lower[:, 0]) <= 0.0):
        # a graph over x1 never meets its vertical translate
        raise InvalidGeometry("lower curve must be strictly increasing in x1 (it would cross its translate)")
    if np.ptp(lower[:, 1]) >= tau:
        raise InvalidGeometry("lower curve crosses its translate: vertical extent exceeds tau")

    smooth = {"lower_curve": lower_curve.smoothness}
    if profile is not None:
        poly = profile(np.arange(_SAMPLES) / _SAMPLES)
        if _segments_cross(poly[::4]):
            raise InvalidGeometry("profile curve is self-intersecting")
        x1min, x1max = poly[:, 0].min(), poly[:, 0].max()
        if x1min < delta_margin or x1max > d - delta_margin:
            raise InvalidGeometry(
                f"profile x1-range [{x1min:.4g}, {x1max:.4g}] leaves the strip "
                f"delta_margin < x1 < d - delta_margin ({delta_margin:.4g})"
            )
        base = np.interp(poly[:, 0], lower[:, 0], lower[:, 1])
        rel = poly[:, 1] - base
        if rel.min() <= 0.0 or rel.max() >= tau:
            raise InvalidGeometry("profile touches or crosses the lower/upper periodic curves")
        for shift in (0.0, tau):
            gaps = np.linalg.norm(poly[::4, None, :] - (lower[None, ::4, :] + [0.0, shift]), axis=-1)
            if gaps.min() < delta_margin:
                raise InvalidGeometry("profile is closer than delta_margin to a periodic curve")
        smooth["profile"] = getattr(profile, "smoothness", "unknown")
    return CascadeGeometry(tau, d, lower_curve, profile, delta_margin, metadata={"smoothness": smooth})


def classify_boundary(geometry, point, tol=None):
    """Boundary tag of a point on the boundary of Omega.

    Corners A-/A+ are Inflow and B-/B+ are Outflow.  Raises
    ``NotOnBoundary`` if the point is farther than ``tol`` from every part.
    """
    g = geometry
    if tol is None:
        tol = 1e-9 * max(g.tau, g.d)
    x1, x2 = (float(v) for v in point)
    a2 = g.lower_x2(0.0)
    b2 = g.lower_x2(g.d)
    if abs(x1) <= tol and a2 - tol <= x2 <= a2 + g.tau + tol:
        return Tag.INFLOW
    if abs(x1 - g.d) <= tol and b2 - tol <= x2 <= b2 + g.tau + tol:
        return Tag.OUTFLOW
    if -tol <= x1 <= g.d + tol:
        base = g.lower_x2(min(max(x1, 0.0), g.d))
        if _curve_distance(g.lower_curve, (x1, x2)) <= tol or abs(x2 - base) <= tol:
            return Tag.LOWER
        if _curve_distance(g.lower_curve, (x1, x2 - g.tau)) <= tol or abs(x2 - g.tau - base) <= tol:
            return Tag.UPPER
    if g.profile is not None and _curve_distance(g.profile, (x1, x2), closed=True) <= tol:
        return Tag.PROFILE
    raise NotOnBoundary(f"point ({x1}, {x2}) is not on the boundary (tol={tol:g})")


def _curve_distance(curve, point, closed=False, n=400):
    p = np.asarray(point, dtype=float)
    t = np.arange(n + (0 if closed else 1)) / n
    dist = np.linalg.norm(curve(t) - p, axis=1)
    k = int(np.argmin(dist))
    lo, hi = t[k] - 1.0 / n, t[k] + 1.0 / n
    if not closed:
        lo, hi = max(lo, 0.0), min(hi, 1.0)
    res = minimize_scalar(
        lambda s: float(np.linalg.norm(curve(np.array(s)) - p)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-14},
    )
    return min(float(res.fun), float(dist[k]))
