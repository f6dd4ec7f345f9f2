"""P1/P2 Lagrange kernels on straight-sided triangles, vectorized over elements."""

import numpy as np

from .quadrature import gauss_segment, triangle_rule

_REF_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def barycentric_gradients(mesh):
    """Gradients of the three barycentric coordinates, shape (nT, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)  # columns
    invJ = np.linalg.inv(J)
    return np.einsum("tji,kj->tki", invJ, _REF_GRAD)


def map_points(mesh, bary, triangles=None):
    """Physical coordinates of barycentric points, shape (nT, nq, 2)."""
    tri = mesh.triangles if triangles is None else triangles
    return np.einsum("qk,tkd->tqd", bary, mesh.vertices[tri])


def p2_values(bary):
    """Quadratic basis at barycentric points, shape (nq, 6).

    Local nodes: vertices 0-2, then midpoints of edges (1,2), (2,0), (0,1).
    """
    L0, L1, L2 = bary[..., 0], bary[..., 1], bary[..., 2]
    return np.stack(
        [L0 * (2 * L0 - 1), L1 * (2 * L1 - 1), L2 * (2 * L2 - 1), 4 * L1 * L2, 4 * L2 * L0, 4 * L0 * L1],
        axis=-1,
    )


def p2_gradients(grad_lam, bary):
    """Physical gradients of the quadratic basis, shape (nT, nq, 6, 2).

    ``bary`` is (nq, 3) shared by all elements or (nT, nq, 3).
    """
    L = bary if bary.ndim == 3 else bary[None]
    G = grad_lam
    out = np.empty((G.shape[0], L.shape[1], 6, 2))
    for i in range(3):
        out[:, :, i] = (4 * L[..., i] - 1)[..., None] * G[:, None, i]
    for k, (i, j) in enumerate(((1, 2), (2, 0), (0, 1))):
        out[:, :, 3 + k] = 4 * (L[..., i][..., None] * G[:, None, j] + L[..., j][..., None] * G[:, None, i])
    return out


def p2_edge_values(s):
    """1D quadratic basis on an edge parametrized by s in [0, 1]: start, mid, end."""
    s = np.asarray(s)
    return np.stack([(1 - s) * (1 - 2 * s), 4 * s * (1 - s), s * (2 * s - 1)], axis=-1)


def p2_edge_derivative(s):
    s = np.asarray(s)
    return np.stack([4 * s - 3, 4 - 8 * s, 4 * s - 1], axis=-1)


def element_nodes(mesh):
    """Global P2 node indices per triangle (vertices first, then nV + edge id)."""
    return np.hstack([mesh.triangles, mesh.n_vertices + mesh.tri_edges])


def node_coordinates(mesh):
    e = mesh.edges
    mids = 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])
    return np.vstack([mesh.vertices, mids])


def integrate(mesh, integrand, order=6):
    """Sum of the triangle rule over all elements of ``integrand(x)``.

    ``integrand`` receives points of shape (nT, nq, 2) and returns values
    of shape (nT, nq).
    """
    bary, w = triangle_rule(order)
    x = map_points(mesh, bary)
    vals = np.asarray(integrand(x), dtype=float)
    vals = np.broadcast_to(vals, x.shape[:2])
    return float(np.sum(mesh.signed_areas[:, None] * w[None, :] * vals))


def edge_points(mesh, edges, npts):
    """Gauss points on a list of edges: (points (nE, nq, 2), weights (nq,), lengths (nE,), s (nq,))."""
    s, w = gauss_segment(npts)
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    return pts, w, np.linalg.norm(b - a, axis=1), s


def evaluate_p2(mesh, values, bary, triangles=None):
    """Evaluate nodal P2 coefficients ``values`` (nN, ...) at barycentric points."""
    nodes = element_nodes(mesh)
    if triangles is not None:
        nodes = nodes[triangles]
    phi = p2_values(bary)
    if phi.ndim == 3:
        return np.einsum("tqk,tk...->tq...", phi, values[nodes])
    return np.einsum("qk,tk...->tq...", phi, values[nodes])


def evaluate_p2_gradient(mesh, values, bary, triangles=None):
    """Gradient of nodal P2 field (nN, c) at barycentric points: (nT, nq, c, 2)."""
    nodes = element_nodes(mesh)
    G = barycentric_gradients(mesh)
    if triangles is not None:
        nodes = nodes[triangles]
        G = G[triangles]
    dphi = p2_gradients(G, bary)
    return np.einsum("tqkd,tkc->tqcd", dphi, values[nodes])


def evaluate_p1(mesh, values, bary, triangles=None):
    tri = mesh.triangles if triangles is None else mesh.triangles[triangles]
    if bary.ndim == 3:
        return np.einsum("tqk,tk...->tq...", bary, values[tri])
    return np.einsum("qk,tk...->tq...", bary, values[tri])


def boundary_edge_geometry(mesh, edges):
    """Adjacent triangle, outward unit normal and local barycentric map per boundary edge.

    Returns (tri (nE,), normals (nE, 2), local (nE, 2)) where ``local`` holds
    the local vertex numbers of the edge endpoints in the adjacent triangle.
    """
    ids = np.array([mesh.edge_id(int(a), int(b)) for a, b in edges], dtype=np.int64)
    tri = mesh.edge_triangles[ids, 0]
    T = mesh.triangles[tri]
    local = np.empty((len(edges), 2), dtype=np.int64)
    for k in range(2):
        local[:, k] = np.argmax(T == edges[:, k][:, None], axis=1)
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    t = b - a
    n = np.column_stack([t[:, 1], -t[:, 0]]) / np.linalg.norm(t, axis=1)[:, None]
    opposite = 3 - local[:, 0] - local[:, 1]
    c = mesh.vertices[T[np.arange(len(T)), opposite]]
    flip = np.einsum("ij,ij->i", n, c - a) > 0
    n[flip] *= -1
    return tri, n, local


def edge_barycentric(local, s):
    """Barycentric coordinates (nE, nq, 3) of points a + s (b - a) on each edge."""
    bary = np.zeros((len(local), len(s), 3))
    for e in range(len(local)):
        bary[e, :, local[e, 0]] = 1.0 - s
        bary[e, :, local[e, 1]] = s
    return bary
