"""Principal-angle geometry on the Grassmann manifold Gr(k, n).

A subspace is represented by an ``n x k`` matrix with orthonormal columns.
"""

import numpy as np

from .exceptions import DimensionError, InvariantError

ORTHO_ATOL = 1e-10


def orthonormalize(raw, rtol=1e-10):
    """Orthonormal frame spanning the columns of ``raw``.

    Uses a thin QR factorization with the signs fixed so that ``R`` has a
    positive diagonal, which makes the output reproducible.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    if raw.ndim != 2 or raw.shape[1] == 0 or raw.shape[1] > raw.shape[0]:
        raise DimensionError(f"expected an n x k matrix with 1 <= k <= n, got {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise InvariantError("frame has non-finite entries")
    Q, R = np.linalg.qr(raw)
    d = np.diag(R)
    scale = max(np.max(np.abs(raw)), np.finfo(float).tiny)
    if np.min(np.abs(d)) <= rtol * scale * raw.shape[0]:
        raise InvariantError("frame is rank deficient")
    return Q * np.sign(d)


def check_subspace(X, atol=ORTHO_ATOL):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] == 0 or X.shape[1] > X.shape[0]:
        raise DimensionError(f"expected an n x k frame with 1 <= k <= n, got {X.shape}")
    err = np.max(np.abs(X.T @ X - np.eye(X.shape[1])))
    if err > atol:
        raise InvariantError(f"frame is not orthonormal (max |X^T X - I| = {err:.3g})")
    return X


def projector(X):
    X = check_subspace(X)
    return X @ X.T


def principal_angles(X, Y):
    """Principal angles in ascending order.

    Large angles are ``arccos`` of the singular values of ``X^T Y`` clamped to
    [0, 1]; angles whose cosine exceeds ``1/sqrt(2)`` are taken from the sines
    (singular values of ``Y - X X^T Y``), where ``arccos`` would lose half the
    digits.
    """
    X = check_subspace(X)
    Y = check_subspace(Y)
    if X.shape != Y.shape:
        raise DimensionError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    cos = np.clip(np.linalg.svd(X.T @ Y, compute_uv=False), 0.0, 1.0)  # descending
    sin = np.clip(np.linalg.svd(Y - X @ (X.T @ Y), compute_uv=False), 0.0, 1.0)[::-1]
    small = cos ** 2 > 0.5
    return np.where(small, np.arcsin(sin), np.arccos(cos))


def dist_grassmann(X, Y):
    return float(np.linalg.norm(principal_angles(X, Y)))


def pairwise_distances(frames):
    m = len(frames)
    D = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            D[i, j] = D[j, i] = dist_grassmann(frames[i], frames[j])
    return D
