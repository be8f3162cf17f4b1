"""Riemannian operations on symmetric positive definite matrices.

Matrix functions go through the symmetric eigendecomposition
``P = V diag(w) V^T`` and accept stacks of shape ``(..., n, n)``.
"""

import warnings

import numpy as np

from .exceptions import ConvergenceWarning, DimensionError, InvariantError

SYM_ATOL = 1e-10


# --------------------------------------------------------------------------
# validation

def symmetrize(M):
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def _check_square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2] or M.shape[-1] == 0:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvariantError(f"{name} has non-finite entries")
    return M


def check_symmetric(M, atol=SYM_ATOL, name="matrix"):
    """Return the symmetrized ``M`` or raise :class:`InvariantError`."""
    M = _check_square(M, name)
    asym = np.max(np.abs(M - np.swapaxes(M, -1, -2)))
    if asym > atol:
        raise InvariantError(f"{name} is not symmetric (max |M - M^T| = {asym:.3g})")
    return symmetrize(M)


def check_spd(P, atol=SYM_ATOL, name="matrix"):
    """Return the symmetrized ``P`` if it is symmetric positive definite."""
    P = check_symmetric(P, atol, name)
    wmin = np.min(np.linalg.eigvalsh(P))
    if not wmin > 0:
        raise InvariantError(f"{name} is not positive definite (min eigenvalue {wmin:.3g})")
    return P


def is_spd(P, atol=SYM_ATOL):
    try:
        check_spd(P, atol)
    except (InvariantError, DimensionError):
        return False
    return True


def _same_shape(P, Q):
    if P.shape != Q.shape:
        raise DimensionError(f"dimension mismatch: {P.shape} vs {Q.shape}")


# --------------------------------------------------------------------------
# feature construction

def poly_expand(x, degree=2):
    """Polynomial feature map with a fixed monomial order.

    Degree 2 yields ``[1, x_1..x_d, x_i*x_j for i <= j]`` with the quadratic
    terms in row-major upper-triangular order, length ``1 + d + d(d+1)/2``.
    Degree 1 yields ``[1, x_1..x_d]``. Accepts a vector or a ``(m, d)`` batch.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] == 0:
        raise DimensionError("poly_expand needs a non-empty vector or (m, d) batch")
    if degree not in (1, 2):
        raise ValueError(f"unsupported degree {degree!r}; expected 1 or 2")
    if not np.all(np.isfinite(x)):
        raise InvariantError("features must be finite")
    ones = np.ones(x.shape[:-1] + (1,))
    parts = [ones, x]
    if degree == 2:
        i, j = np.triu_indices(x.shape[-1])
        parts.append(x[..., i] * x[..., j])
    return np.concatenate(parts, axis=-1)


def poly_length(d, degree=2):
    return 1 + d + (d * (d + 1) // 2 if degree == 2 else 0)


def spd_from_features(z, epsilon=1e-3):
    """``Z = z z^T + epsilon I``; works on a vector or a ``(m, d)`` batch."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon!r}")
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvariantError("features must be finite")
    d = z.shape[-1]
    return z[..., :, None] * z[..., None, :] + epsilon * np.eye(d)


# --------------------------------------------------------------------------
# matrix functions

def _eig_apply(P, func):
    w, V = np.linalg.eigh(P)
    return symmetrize((V * func(w)[..., None, :]) @ np.swapaxes(V, -1, -2))


def sym_log(P):
    """Matrix logarithm of an SPD matrix (or stack)."""
    return _eig_apply(check_spd(P), np.log)


def sym_exp(A):
    """Matrix exponential of a symmetric matrix (or stack)."""
    return _eig_apply(check_symmetric(A), np.exp)


def sym_sqrt(P):
    return _eig_apply(check_spd(P), np.sqrt)


def sym_invsqrt(P):
    return _eig_apply(check_spd(P), lambda w: 1.0 / np.sqrt(w))


def sym_pow(P, t):
    return _eig_apply(check_spd(P), lambda w: w ** t)


def vectorize_tangent(A):
    """Upper triangle of a symmetric matrix with off-diagonals scaled by sqrt(2).

    Euclidean inner products of the output equal Frobenius inner products of
    the inputs. Works on stacks; output length ``n(n+1)/2``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    i, j = np.triu_indices(n)
    scale = np.where(i == j, 1.0, np.sqrt(2.0))
    return A[..., i, j] * scale


def unvectorize_tangent(v, n):
    v = np.asarray(v, dtype=float)
    i, j = np.triu_indices(n)
    scale = np.where(i == j, 1.0, np.sqrt(2.0))
    A = np.zeros(v.shape[:-1] + (n, n))
    A[..., i, j] = v / scale
    A[..., j, i] = v / scale
    return A


# --------------------------------------------------------------------------
# metrics and geodesics

def ai_inner(P, A, B):
    """Affine-invariant inner product ``Tr(P^-1 A P^-1 B)`` at ``P``."""
    P = check_spd(P)
    A = check_symmetric(A, name="A")
    B = check_symmetric(B, name="B")
    _same_shape(P, A)
    _same_shape(P, B)
    PA = np.linalg.solve(P, A)
    PB = np.linalg.solve(P, B)
    return float(np.trace(PA @ PB))


def _whiten(P, Q):
    """``P^{-1/2} Q P^{-1/2}`` together with ``P^{1/2}`` and ``P^{-1/2}``."""
    w, V = np.linalg.eigh(P)
    s = np.sqrt(w)
    half = (V * s) @ V.T
    ihalf = (V / s) @ V.T
    return symmetrize(ihalf @ Q @ ihalf), half, ihalf


def dist_affine_invariant(P, Q):
    r"""Affine-invariant geodesic distance :math:`\|\log(P^{-1/2} Q P^{-1/2})\|_F`.

    Computed from the eigenvalues of the whitened matrix, so the result is
    symmetric in its arguments up to round-off.
    """
    P = check_spd(P, name="P")
    Q = check_spd(Q, name="Q")
    _same_shape(P, Q)
    C, _, _ = _whiten(P, Q)
    w = np.linalg.eigvalsh(C)
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


def dist_log_euclidean(P, Q):
    P = check_spd(P, name="P")
    Q = check_spd(Q, name="Q")
    _same_shape(P, Q)
    return float(np.linalg.norm(sym_log(P) - sym_log(Q)))


def geodesic_ai(P, Q, t):
    """Point at parameter ``t`` in [0, 1] on the affine-invariant geodesic P -> Q."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t!r}")
    P = check_spd(P, name="P")
    Q = check_spd(Q, name="Q")
    _same_shape(P, Q)
    if t == 0.0:
        return P.copy()
    if t == 1.0:
        return Q.copy()
    C, half, _ = _whiten(P, Q)
    return symmetrize(half @ _eig_apply(C, lambda w: w ** t) @ half)


def log_map_ai(P, Q):
    """Riemannian log of ``Q`` at ``P``, expressed in whitened coordinates."""
    C, _, _ = _whiten(P, Q)
    return _eig_apply(C, np.log)


def log_euclidean_mean(points):
    points = _as_point_stack(points)
    return sym_exp(np.mean(sym_log(points), axis=0))


def _as_point_stack(points):
    points = np.asarray(points, dtype=float)
    if points.ndim == 2:
        points = points[None]
    if points.ndim != 3 or points.shape[0] == 0:
        raise DimensionError("expected a non-empty list of square matrices of equal size")
    return check_spd(points, name="points")


def karcher_mean(points, max_iter=100, tol=1e-10):
    """Affine-invariant Karcher (Frechet) mean by fixed-point iteration.

    Starts at the log-Euclidean mean and iterates
    ``M <- M^{1/2} exp(mean_k log(M^{-1/2} P_k M^{-1/2})) M^{1/2}``
    until the Frobenius norm of the whitened tangent mean drops below ``tol``.
    If ``max_iter`` is exhausted a :class:`ConvergenceWarning` is emitted and
    the last iterate is returned.
    """
    points = _as_point_stack(points)
    M = log_euclidean_mean(points)
    if points.shape[0] == 1:
        return points[0].copy()
    norm = np.inf
    for _ in range(max_iter):
        w, V = np.linalg.eigh(M)
        s = np.sqrt(w)
        half = (V * s) @ V.T
        ihalf = (V / s) @ V.T
        whitened = symmetrize(ihalf @ points @ ihalf)
        T = np.mean(_eig_apply(whitened, np.log), axis=0)
        norm = np.linalg.norm(T)
        M = symmetrize(half @ _eig_apply(T, np.exp) @ half)
        if norm < tol:
            return M
    warnings.warn(
        f"karcher_mean did not converge in {max_iter} iterations "
        f"(tangent norm {norm:.3g} >= tol {tol:.3g}); returning last iterate",
        ConvergenceWarning,
        stacklevel=2,
    )
    return M
