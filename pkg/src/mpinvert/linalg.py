"""Dense linear algebra helpers: square solves, smallest singular value, weighted norms."""

import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionError, NumericalError, SingularMatrixError

# above this size sigma_min switches from a full SVD to inverse iteration
_SVD_MAX_DIM = 64


def as_matrix(a):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError("matrix has non-finite entries")
    return a


def _lu(a):
    # singularity is detected from the factors; scipy's warning is noise here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        return scipy.linalg.lu_factor(a, check_finite=False)


def inner(u, v, weights=None):
    """Euclidean inner product, or sum_i w_i u_i v_i when weights are given."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if weights is None:
        return float(u @ v)
    return float(np.sum(weights * u * v))


def norm(u, weights=None):
    return float(np.sqrt(max(inner(u, u, weights), 0.0)))


def solve_square(a, b, rcond=None):
    """Solve ``a @ x = b`` for square ``a`` with a pivoted LU factorization.

    Raises SingularMatrixError when the reciprocal condition number falls below
    ``rcond`` (default ``n * eps``) or the back-substituted residual fails the
    bound ``|ax - b| <= 1e-10 (|a||x| + |b|)``.
    """
    a = as_matrix(a)
    b = np.asarray(b, dtype=float)
    n, m = a.shape
    if n != m:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    if b.shape != (n,):
        raise DimensionError(f"right-hand side has shape {b.shape}, expected ({n},)")
    if rcond is None:
        rcond = n * np.finfo(float).eps
    anorm = np.linalg.norm(a, 1)
    if anorm == 0.0:
        raise SingularMatrixError("zero matrix")
    lu, piv = _lu(a)
    if np.any(np.diag(lu) == 0.0):
        raise SingularMatrixError("exactly singular matrix")
    inv_cond, _ = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")
    if inv_cond < rcond:
        raise SingularMatrixError(f"matrix is numerically singular (rcond={inv_cond:.3e})")
    x = scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    resid = np.linalg.norm(a @ x - b)
    bound = 1e-10 * (np.linalg.norm(a, 2) * np.linalg.norm(x) + np.linalg.norm(b))
    if not np.isfinite(resid) or resid > bound:
        raise SingularMatrixError(f"solve residual {resid:.3e} exceeds bound {bound:.3e}")
    return x


def sigma_min(a, tol=1e-10, max_iter=2000):
    """Smallest singular value of a square matrix."""
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise DimensionError(f"matrix must be square, got {a.shape}")
    if n <= _SVD_MAX_DIM:
        return float(np.linalg.svd(a, compute_uv=False)[-1])
    # inverse iteration on a^T a; falls back to the SVD when a cannot be factored
    try:
        lu = _lu(a)
    except (np.linalg.LinAlgError, ValueError):
        return float(np.linalg.svd(a, compute_uv=False)[-1])
    if np.any(np.diag(lu[0]) == 0.0):
        return 0.0
    v = np.ones(n) / np.sqrt(n)
    for _ in range(max_iter):
        w = scipy.linalg.lu_solve(lu, v, trans=1, check_finite=False)
        w = scipy.linalg.lu_solve(lu, w, trans=0, check_finite=False)
        wn = np.linalg.norm(w)
        if not np.isfinite(wn) or wn == 0.0:
            return float(np.linalg.svd(a, compute_uv=False)[-1])
        w /= wn
        done = min(np.linalg.norm(w - v), np.linalg.norm(w + v)) <= tol
        v = w
        if done:
            break
    # Rayleigh quotient: error is quadratic in the eigenvector error
    return float(np.linalg.norm(a @ v))
