"""Linear solvers for the symmetric saddle-point systems."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonConvergence, SingularSystem


REG_EPS = 1e-8
REFINE_TOL = 1e-13
REFINE_MAXIT = 30
SINGULAR_TOL = 1e-8


def solve_direct(matrix, rhs, n_velocity=None):
    """Sparse direct solve, deterministic for fixed input.

    Without ``n_velocity`` this is a plain SuperLU factorization.  With it,
    the matrix is read as [[A, B^T], [B, 0]] with A positive definite.  The
    zero block is shifted to -eps I, which makes the matrix quasi-definite,
    so diagonal pivots are always admissible and a symmetric minimum-degree
    ordering keeps the fill low.  Iterative refinement against the
    unshifted matrix then removes the perturbation.
    """
    K = sp.csc_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    if n_velocity is None or n_velocity >= K.shape[0]:
        lu = _factor(K, permc_spec="COLAMD")
        x = lu.solve(b)
        refine = 0
    else:
        shift = np.zeros(K.shape[0])
        scale = float(np.abs(K.diagonal()[:n_velocity]).mean()) if n_velocity else 1.0
        shift[n_velocity:] = -REG_EPS * scale
        lu = _factor(
            (K + sp.diags(shift)).tocsc(),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options=dict(SymmetricMode=True),
        )
        x = lu.solve(b)
        bnorm = float(np.linalg.norm(b)) or 1.0
        refine = 0
        r = b - K @ x
        prev = np.inf
        while refine < REFINE_MAXIT:
            rn = float(np.linalg.norm(r))
            if rn <= REFINE_TOL * bnorm or rn >= 0.9 * prev:
                break
            prev = rn
            x = x + lu.solve(r)
            r = b - K @ x
            refine += 1
    if not np.all(np.isfinite(x)):
        raise SingularSystem("factorization produced non-finite values")
    res = float(np.linalg.norm(K @ x - b))
    if res > SINGULAR_TOL * (float(np.linalg.norm(b)) or 1.0):
        raise SingularSystem(f"direct solve left relative residual {res / (np.linalg.norm(b) or 1.0):.3e}")
    stats = {"method": "direct", "factor_nnz": int(lu.L.nnz + lu.U.nnz), "refinement_steps": refine, "residual": res}
    return x, stats


def _factor(K, **kw):
    try:
        lu = spla.splu(K, **kw)
    except RuntimeError as exc:
        raise SingularSystem(f"factorization failed: {exc}") from None
    return lu


def solve_minres(matrix, rhs, n_velocity, pressure_mass=None, nu=1.0, rtol=1e-10, maxiter=5000):
    """Preconditioned MINRES for [[A, B^T], [B, 0]].

    The preconditioner is block diagonal: an exact factorization of the
    velocity block and the pressure mass matrix scaled by 1/nu.
    """
    K = sp.csr_matrix(matrix)
    A = K[:n_velocity, :n_velocity].tocsc()
    n = K.shape[0]
    lu_a = spla.splu(A)
    if pressure_mass is None:
        Mp = sp.identity(n - n_velocity, format="csc")
    else:
        Mp = sp.csc_matrix(pressure_mass)
    lu_p = spla.splu(Mp)

    def apply(r):
        out = np.empty_like(r)
        out[:n_velocity] = lu_a.solve(r[:n_velocity])
        out[n_velocity:] = nu * lu_p.solve(r[n_velocity:])
        return out

    M = spla.LinearOperator((n, n), matvec=apply, dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.minres(K, rhs, rtol=rtol, maxiter=maxiter, M=M, callback=cb)
    res = float(np.linalg.norm(K @ x - rhs))
    if info != 0:
        raise NonConvergence(f"MINRES stopped with info={info} after {count[0]} iterations (residual {res:.3e})")
    return x, {"method": "minres", "iterations": count[0], "residual": res}
