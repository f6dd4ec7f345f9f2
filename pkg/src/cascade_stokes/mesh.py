"""Periodic-conforming triangulations of the cascade period.

The lower boundary curve is discretized first and its 1D mesh is copied
by translation onto the upper curve, so periodic vertex pairs match
exactly.  Interior meshing never inserts points on boundary segments.
"""

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
import triangle as tr

from .errors import InvariantViolation, MeshFailure, ParseError
from .geometry import TAG_BY_NAME, TAG_NAMES, Tag

# local edge k is opposite local vertex k
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    periodic_pairs: np.ndarray
    tau: float

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.tau == other.tau
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.boundary_edges, other.boundary_edges)
            and np.array_equal(self.boundary_tags, other.boundary_tags)
            and np.array_equal(self.periodic_pairs, other.periodic_pairs)
        )

    __hash__ = object.__hash__

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def signed_areas(self):
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self):
        return float(np.sum(self.signed_areas))

    @cached_property
    def _edge_data(self):
        t = self.triangles
        local = t[:, LOCAL_EDGES]  # (nT, 3, 2)
        keys = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        tri_edges = inverse.reshape(-1, 3)
        edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
        counts = np.zeros(len(edges), dtype=np.int64)
        for flat, e in enumerate(inverse):
            if counts[e] >= 2:
                raise InvariantViolation(f"edge {tuple(edges[e])} shared by more than two triangles")
            edge_tris[e, counts[e]] = flat // 3
            counts[e] += 1
        return edges, tri_edges, edge_tris

    @property
    def edges(self):
        """Unique edges (nE, 2) with sorted vertex indices."""
        return self._edge_data[0]

    @property
    def tri_edges(self):
        """Global edge index of local edge k (opposite vertex k), shape (nT, 3)."""
        return self._edge_data[1]

    @property
    def edge_triangles(self):
        """Adjacent triangles per edge, -1 where absent."""
        return self._edge_data[2]

    @cached_property
    def edge_lookup(self):
        return {(int(a), int(b)): i for i, (a, b) in enumerate(self.edges)}

    def edge_id(self, a, b):
        return self.edge_lookup[(min(a, b), max(a, b))]

    @property
    def h(self):
        e = self.edges
        return float(np.max(np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)))

    def tagged_edges(self, *tags):
        mask = np.isin(self.boundary_tags, [int(t) for t in tags])
        return self.boundary_edges[mask]

    def tagged_vertices(self, *tags):
        return np.unique(self.tagged_edges(*tags).ravel())

    @cached_property
    def periodic_edge_pairs(self):
        """(lower_edge, upper_edge) global edge indices matched by the pairing."""
        partner = dict((int(a), int(b)) for a, b in self.periodic_pairs)
        out = []
        for a, b in self.tagged_edges(Tag.LOWER):
            try:
                up = self.edge_id(partner[int(a)], partner[int(b)])
            except KeyError:
                raise InvariantViolation(f"lower edge ({a}, {b}) has no translated upper edge")
            out.append((self.edge_id(a, b), up))
        return np.array(out, dtype=np.int64).reshape(-1, 2)

    def validate(self):
        """Check every structural invariant; raise ``InvariantViolation``."""
        if np.any(self.triangles < 0) or np.any(self.triangles >= self.n_vertices):
            raise InvariantViolation("triangle references a missing vertex")
        bad = np.flatnonzero(self.signed_areas <= 0.0)
        if len(bad):
            raise InvariantViolation(f"triangle {int(bad[0])} has non-positive signed area")
        shift = np.array([0.0, self.tau])
        pairs = self.periodic_pairs
        if len(pairs):
            off = self.vertices[pairs[:, 1]] - self.vertices[pairs[:, 0]] - shift
            worst = np.abs(off).max()
            if worst > 1e-12 * self.tau:
                raise InvariantViolation(f"periodic pair offset differs from (0, tau) by {worst:.3e}")
        lower = set(self.tagged_vertices(Tag.LOWER).tolist())
        upper = set(self.tagged_vertices(Tag.UPPER).tolist())
        lo_p = pairs[:, 0].tolist()
        up_p = pairs[:, 1].tolist()
        if set(lo_p) != lower or len(lo_p) != len(set(lo_p)):
            raise InvariantViolation("lower boundary vertices are not paired exactly once")
        if set(up_p) != upper or len(up_p) != len(set(up_p)):
            raise InvariantViolation("pairing is not a bijection onto upper boundary vertices")
        boundary = np.flatnonzero(self.edge_triangles[:, 1] < 0)
        tagged = np.sort(self.boundary_edges, axis=1)
        keys = [(int(a), int(b)) for a, b in tagged]
        if len(set(keys)) != len(keys):
            raise InvariantViolation("a boundary edge carries more than one tag")
        lookup = self.edge_lookup
        try:
            ids = {lookup[k] for k in keys}
        except KeyError as exc:
            raise InvariantViolation(f"tagged edge {exc.args[0]} is not a mesh edge")
        if ids != set(boundary.tolist()):
            raise InvariantViolation("boundary edge tags do not cover the mesh boundary exactly")
        if len(self.periodic_edge_pairs) != len(self.tagged_edges(Tag.UPPER)):
            raise InvariantViolation("lower and upper boundary meshes are not translates")
        return self


def _make_mesh(vertices, triangles, bedges, btags, pairs, tau):
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    p = vertices[triangles]
    area2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    flip = area2 < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    return Mesh(
        vertices,
        triangles,
        np.asarray(bedges, dtype=np.int64).reshape(-1, 2),
        np.asarray(btags, dtype=np.int64),
        np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
        float(tau),
    )


def structured_mesh(geometry, n1, n2):
    """Structured triangulation of a blade-free period.

    Grid points are ``lower(i/n1) + (0, j*tau/n2)``; each cell is split
    along its shorter diagonal.
    """
    if geometry.profile is not None:
        raise MeshFailure("structured meshes are only available for blade-free geometries")
    if n1 < 1 or n2 < 1:
        raise MeshFailure("structured mesh needs n1, n2 >= 1")
    tau = geometry.tau
    base = geometry.lower_curve(np.arange(n1 + 1) / n1)
    verts = np.empty(((n2 + 1) * (n1 + 1), 2))
    for j in range(n2 + 1):
        row = base.copy()
        row[:, 1] = base[:, 1] + (tau if j == n2 else tau * j / n2)
        verts[j * (n1 + 1):(j + 1) * (n1 + 1)] = row

    def vid(i, j):
        return j * (n1 + 1) + i

    tris = []
    for j in range(n2):
        for i in range(n1):
            a, b, c, e = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if np.linalg.norm(verts[c] - verts[a]) <= np.linalg.norm(verts[e] - verts[b]):
                tris += [(a, b, c), (a, c, e)]
            else:
                tris += [(a, b, e), (b, c, e)]
    bedges, btags = [], []
    for i in range(n1):
        bedges.append((vid(i, 0), vid(i + 1, 0)))
        btags.append(Tag.LOWER)
    for j in range(n2):
        bedges.append((vid(n1, j), vid(n1, j + 1)))
        btags.append(Tag.OUTFLOW)
    for i in range(n1):
        bedges.append((vid(i + 1, n2), vid(i, n2)))
        btags.append(Tag.UPPER)
    for j in range(n2):
        bedges.append((vid(0, j + 1), vid(0, j)))
        btags.append(Tag.INFLOW)
    pairs = [(vid(i, 0), vid(i, n2)) for i in range(n1 + 1)]
    return _make_mesh(verts, tris, bedges, btags, pairs, tau).validate()


def _arc_length_samples(curve, n, closed=False, dense=4000):
    t = np.linspace(0.0, 1.0, dense + 1)
    p = curve(t)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(p, axis=0), axis=1))])
    targets = s[-1] * np.arange(n + (0 if closed else 1)) / n
    tt = np.interp(targets, s, t)
    if not closed:
        tt[0], tt[-1] = 0.0, 1.0
    return curve(tt), s[-1]


def _interior_point(poly):
    """A point strictly inside a simple polygon (midpoint of a horizontal chord)."""
    y = 0.5 * (poly[:, 1].min() + poly[:, 1].max())
    y0, y1 = poly[:, 1], np.roll(poly[:, 1], -1)
    x0, x1 = poly[:, 0], np.roll(poly[:, 0], -1)
    m = (y0 > y) != (y1 > y)
    xs = np.sort(x0[m] + (y - y0[m]) * (x1[m] - x0[m]) / (y1[m] - y0[m]))
    return np.array([0.5 * (xs[0] + xs[1]), y])


def unstructured_mesh(geometry, h_target, min_angle=28.0):
    """Constrained Delaunay mesh of the period, blade allowed."""
    g = geometry
    h = float(h_target)
    lower_len = _arc_length_samples(g.lower_curve, 1)[1]
    n_low = max(1, math.ceil(lower_len / h))
    lower, _ = _arc_length_samples(g.lower_curve, n_low)
    upper = lower + np.array([0.0, g.tau])
    n_side = max(1, math.ceil(g.tau / h))
    a2, b2 = lower[0, 1], lower[-1, 1]
    js = np.arange(1, n_side) / n_side
    inflow = np.column_stack([np.zeros(n_side - 1), a2 + g.tau * js])
    outflow = np.column_stack([np.full(n_side - 1, g.d), b2 + g.tau * js])

    verts = [lower, upper, inflow, outflow]
    nl = n_low + 1
    lo = np.arange(nl)
    up = nl + np.arange(nl)
    io = 2 * nl + np.arange(n_side - 1)
    oo = 2 * nl + (n_side - 1) + np.arange(n_side - 1)
    segs, marks = [], []
    for i in range(n_low):
        segs.append((lo[i], lo[i + 1]))
        marks.append(Tag.LOWER)
        segs.append((up[i + 1], up[i]))
        marks.append(Tag.UPPER)
    in_chain = [lo[0], *io, up[0]]
    out_chain = [lo[-1], *oo, up[-1]]
    for k in range(n_side):
        segs.append((in_chain[k + 1], in_chain[k]))
        marks.append(Tag.INFLOW)
        segs.append((out_chain[k], out_chain[k + 1]))
        marks.append(Tag.OUTFLOW)
    holes = []
    if g.profile is not None:
        perim = _arc_length_samples(g.profile, 1, closed=True)[1]
        n_p = max(8, math.ceil(perim / h))
        prof = g.profile_polygon(n_p)
        base = sum(len(v) for v in verts)
        verts.append(prof)
        for k in range(n_p):
            segs.append((base + k, base + (k + 1) % n_p))
            marks.append(Tag.PROFILE)
        holes.append(_interior_point(prof))
    V = np.vstack(verts)
    pslg = {
        "vertices": V,
        "segments": np.array(segs, dtype=np.int32),
        "segment_markers": np.array(marks, dtype=np.int32),
    }
    if holes:
        pslg["holes"] = np.array(holes)
    max_area = 0.4 * h * h
    out = tr.triangulate(pslg, f"pq{min_angle}a{max_area:.17g}YQ")
    if "triangles" not in out or len(out["triangles"]) == 0:
        raise MeshFailure("mesher returned no triangles")
    W = out["vertices"]
    if not np.array_equal(W[: len(V)], V):
        raise MeshFailure("mesher moved boundary vertices")
    if len(out["segments"]) != len(segs):
        raise MeshFailure("mesher split a boundary segment")
    pairs = np.column_stack([lo, up])
    mesh = _make_mesh(W, out["triangles"], segs, marks, pairs, g.tau)
    if np.any(mesh.signed_areas <= 1e-14 * h * h):
        raise MeshFailure("degenerate triangle produced")
    return mesh.validate()


def generate_mesh(geometry, h_target, kind=None):
    """Mesh ``geometry`` with target edge length ``h_target``.

    Blade-free geometries default to a structured grid; ``kind`` may be
    ``"structured"`` or ``"unstructured"``.
    """
    if not h_target > 0:
        raise MeshFailure("h_target must be positive")
    if kind is None:
        kind = "structured" if geometry.profile is None else "unstructured"
    if kind == "structured":
        n1 = max(1, math.ceil(geometry.d / h_target))
        n2 = max(1, math.ceil(geometry.tau / h_target))
        return structured_mesh(geometry, n1, n2)
    if kind == "unstructured":
        return unstructured_mesh(geometry, h_target)
    raise MeshFailure(f"unknown mesh kind {kind!r}")


def fill_profile(mesh):
    """Triangulate the blade hole and append it to the mesh.

    Returns ``(filled, n_outer)``: triangles ``[:n_outer]`` of ``filled``
    are exactly the triangles of ``mesh`` (same vertex indices).  A
    blade-free mesh is returned unchanged.
    """
    pe = mesh.tagged_edges(Tag.PROFILE)
    if len(pe) == 0:
        return mesh, mesh.n_triangles
    loop = _edge_loop(pe)
    poly = mesh.vertices[loop]
    n = len(loop)
    local = {
        "vertices": poly,
        "segments": np.column_stack([np.arange(n), (np.arange(n) + 1) % n]).astype(np.int32),
    }
    out = tr.triangulate(local, "pqYQ")
    W = out["vertices"]
    index = np.concatenate([loop, mesh.n_vertices + np.arange(len(W) - n)])
    extra = W[n:]
    hole_tris = index[out["triangles"]]
    keep = mesh.boundary_tags != int(Tag.PROFILE)
    filled = _make_mesh(
        np.vstack([mesh.vertices, extra]),
        np.vstack([mesh.triangles, hole_tris]),
        mesh.boundary_edges[keep],
        mesh.boundary_tags[keep],
        mesh.periodic_pairs,
        mesh.tau,
    )
    return filled.validate(), mesh.n_triangles


def _edge_loop(edges):
    nxt = {}
    for a, b in edges:
        nxt.setdefault(int(a), []).append(int(b))
        nxt.setdefault(int(b), []).append(int(a))
    start = int(edges[0, 0])
    loop, prev, cur = [start], None, start
    while True:
        cand = [v for v in nxt[cur] if v != prev]
        step = cand[0]
        if step == start:
            break
        loop.append(step)
        prev, cur = cur, step
        if len(loop) > len(edges):
            raise MeshFailure("profile edges do not form a single closed loop")
    return np.array(loop)


# ---------------------------------------------------------------- file I/O

_MAGIC = "cascade-mesh 1"


def write_mesh(mesh, path):
    """Write the line-oriented ASCII mesh format (17 significant digits)."""
    lines = [
        _MAGIC,
        f"counts {mesh.n_vertices} {mesh.n_triangles} {len(mesh.boundary_edges)} {len(mesh.periodic_pairs)}",
        f"tau {mesh.tau:.17g}",
    ]
    lines += [f"v {x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"t {i} {j} {k}" for i, j, k in mesh.triangles]
    lines += [f"b {i} {j} {TAG_NAMES[Tag(t)]}" for (i, j), t in zip(mesh.boundary_edges, mesh.boundary_tags)]
    lines += [f"p {i} {j}" for i, j in mesh.periodic_pairs]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    """Parse a mesh file and check its invariants."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != _MAGIC:
        raise ParseError(f"expected header {_MAGIC!r}", line=1)
    counts = tau = None
    v, t, b, bt, p = [], [], [], [], []
    for lineno, line in enumerate(raw[1:], start=2):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        kind, args = parts[0], parts[1:]
        try:
            if kind == "counts":
                counts = tuple(int(a) for a in args)
                if len(counts) != 4:
                    raise ValueError("counts needs four integers")
            elif kind == "tau":
                (tau,) = (float(a) for a in args)
            elif kind == "v":
                x, y = (float(a) for a in args)
                v.append((x, y))
            elif kind == "t":
                i, j, k = (int(a) for a in args)
                t.append((i, j, k))
            elif kind == "b":
                i, j, name = args
                if name.upper() not in TAG_BY_NAME:
                    raise ValueError(f"unknown boundary tag {name!r}")
                b.append((int(i), int(j)))
                bt.append(TAG_BY_NAME[name.upper()])
            elif kind == "p":
                i, j = (int(a) for a in args)
                p.append((i, j))
            else:
                raise ValueError(f"unknown record {kind!r}")
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    if counts is None or tau is None:
        raise ParseError("missing counts or tau record")
    if counts != (len(v), len(t), len(b), len(p)):
        raise ParseError(f"counts {counts} do not match records {(len(v), len(t), len(b), len(p))}")
    mesh = Mesh(
        np.array(v, dtype=float).reshape(-1, 2),
        np.array(t, dtype=np.int64).reshape(-1, 3),
        np.array(b, dtype=np.int64).reshape(-1, 2),
        np.array(bt, dtype=np.int64),
        np.array(p, dtype=np.int64).reshape(-1, 2),
        tau,
    )
    return mesh.validate()
