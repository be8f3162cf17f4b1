"""Pure and mixed qubit states: encoding, fidelities, distances, entanglement.

States are plain numpy arrays: a pure state is a complex vector of length
``2**n``; a density matrix is a complex ``2**n x 2**n`` array. Qubit 0 is the
most significant bit of the basis index.

Fidelity convention: :func:`fidelity_pure` returns the squared overlap
``|<psi|phi>|**2``. The distances consume the unsquared overlap ``|<psi|phi>|``.
"""

import numpy as np
from scipy import optimize

from .exceptions import DimensionError, EncodingError, InvariantError

NORM_ATOL = 1e-10
HERM_ATOL = 1e-10
EIG_CLAMP = 1e-12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def num_qubits_for(dim):
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


# --------------------------------------------------------------------------
# validation and construction

def check_state(psi, atol=NORM_ATOL):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise DimensionError(f"state vector must be 1-D, got shape {psi.shape}")
    num_qubits_for(psi.size)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > atol:
        raise InvariantError(f"state is not normalized (norm {norm:.12g})")
    return psi


def check_density(rho, atol=HERM_ATOL):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got shape {rho.shape}")
    num_qubits_for(rho.shape[0])
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > atol:
        raise InvariantError(f"density matrix is not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > atol:
        raise InvariantError(f"density matrix trace is {tr.real:.12g}, expected 1")
    wmin = np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))
    if wmin < -atol:
        raise InvariantError(f"density matrix has negative eigenvalue {wmin:.3g}")
    return rho


def basis_state(index, n_qubits):
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def zero_state(n_qubits):
    return basis_state(0, n_qubits)


def random_state(n_qubits, rng):
    v = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    return v / np.linalg.norm(v)


def random_density(n_qubits, rng, rank=None):
    """Random density matrix from a complex Wishart construction."""
    dim = 1 << n_qubits
    G = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim, rng):
    Z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def amplitude_encode(v):
    """Zero-pad ``v`` to the next power of two and normalize it.

    Accepts a vector or an ``(m, d)`` batch; returns complex amplitudes.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim not in (1, 2) or v.shape[-1] == 0:
        raise EncodingError("expected a non-empty vector or (m, d) batch")
    if not np.all(np.isfinite(v)):
        raise EncodingError("cannot encode non-finite values")
    d = v.shape[-1]
    dim = 1 << max(0, (d - 1).bit_length())
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise EncodingError("cannot amplitude-encode a zero vector")
    out = np.zeros(v.shape[:-1] + (dim,), dtype=complex)
    out[..., :d] = v / norms
    return out


def density_from_pure(psi):
    psi = check_state(psi)
    return np.outer(psi, psi.conj())


# --------------------------------------------------------------------------
# fidelities and distances

def _pair(psi, phi):
    psi = check_state(psi)
    phi = check_state(phi)
    if psi.shape != phi.shape:
        raise DimensionError(f"qubit count mismatch: {psi.size} vs {phi.size} amplitudes")
    return psi, phi


def overlap(psi, phi):
    """``|<psi|phi>|`` clamped to [0, 1]."""
    psi, phi = _pair(psi, phi)
    return float(min(1.0, abs(np.vdot(psi, phi))))


def fidelity_pure(psi, phi):
    """Squared overlap ``|<psi|phi>|**2``."""
    return overlap(psi, phi) ** 2


def fubini_study_distance(psi, phi):
    """Geodesic angle ``arccos |<psi|phi>|`` on projective Hilbert space."""
    return float(np.arccos(overlap(psi, phi)))


def bures_distance_pure(psi, phi):
    """Chordal Bures distance ``sqrt(2 (1 - |<psi|phi>|))`` for pure states."""
    return float(np.sqrt(2.0 * (1.0 - overlap(psi, phi))))


def _psd_sqrt(H):
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    w = np.where(w < EIG_CLAMP, 0.0, w)
    return (V * np.sqrt(w)) @ V.conj().T, w


def root_fidelity(rho, sigma):
    """``Tr sqrt(rho^{1/2} sigma rho^{1/2})`` via Hermitian eigendecompositions."""
    rho = check_density(rho)
    sigma = check_density(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    half, _ = _psd_sqrt(rho)
    _, w = _psd_sqrt(half @ sigma @ half)
    return float(min(1.0, np.sum(np.sqrt(w))))


def bures_distance(rho, sigma):
    """Bures distance ``sqrt(2 (1 - Tr sqrt(rho^{1/2} sigma rho^{1/2})))``."""
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - root_fidelity(rho, sigma)))))


# --------------------------------------------------------------------------
# subsystems

def partial_trace(rho, keep):
    """Reduced density matrix over the qubits listed in ``keep`` (in order)."""
    rho = check_density(rho)
    n = num_qubits_for(rho.shape[0])
    keep = list(keep)
    if not keep or len(set(keep)) != len(keep) or any(not 0 <= q < n for q in keep):
        raise ValueError(f"invalid qubit index set {keep!r} for {n} qubits")
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    # contract each dropped ket axis with its bra axis
    row = list(range(n))
    col = list(range(n, 2 * n))
    for q in drop:
        col[q] = row[q]
    out = keep + [n + q for q in keep]
    reduced = np.einsum(t, row + col, out)
    dim = 1 << len(keep)
    return reduced.reshape(dim, dim)


def bloch_coordinates(rho):
    rho = check_density(rho)
    if rho.shape != (2, 2):
        raise DimensionError("Bloch coordinates are defined for a single qubit")
    return np.array([np.trace(rho @ PAULI[p]).real for p in "XYZ"])


def schmidt_coefficients(psi, cut):
    """Schmidt coefficients across the bipartition ``cut`` | rest, descending.

    ``cut`` is either an integer ``k`` (first ``k`` qubits vs the rest) or a
    collection of qubit indices forming subsystem A.
    """
    psi = check_state(psi)
    n = num_qubits_for(psi.size)
    if n < 2:
        raise DimensionError("Schmidt decomposition needs at least 2 qubits")
    part_a = list(range(cut)) if isinstance(cut, (int, np.integer)) else sorted(cut)
    if not part_a or len(part_a) >= n or len(set(part_a)) != len(part_a) \
            or any(not 0 <= q < n for q in part_a):
        raise ValueError(f"invalid bipartition {cut!r} for {n} qubits")
    part_b = [q for q in range(n) if q not in part_a]
    t = np.transpose(psi.reshape((2,) * n), part_a + part_b)
    return np.linalg.svd(t.reshape(1 << len(part_a), -1), compute_uv=False)


def distance_to_nearest_product(psi):
    """Bures distance from a 2-qubit pure state to the nearest product state.

    Closed form ``sqrt(2 (1 - s_max))`` with ``s_max`` the largest Schmidt
    coefficient, which is the maximal overlap with any product state.
    """
    psi = check_state(psi)
    if psi.size != 4:
        raise DimensionError("distance_to_nearest_product is defined for exactly 2 qubits")
    s = schmidt_coefficients(psi, 1)
    if s[1] < 1e-9:
        return 0.0
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - min(1.0, s[0])))))


def bloch_qubit(theta, phi):
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def product_state_search(psi, grid=9, seed=0):
    """Direct minimization of the Bures distance over product states.

    Independent of the Schmidt route: scans a Bloch-angle grid for both
    qubits, then polishes the best few grid points with Nelder-Mead.
    Returns ``(distance, (theta_a, phi_a, theta_b, phi_b))``.
    """
    psi = check_state(psi)
    if psi.size != 4:
        raise DimensionError("product_state_search is defined for exactly 2 qubits")

    def neg_overlap(x):
        prod = np.kron(bloch_qubit(x[0], x[1]), bloch_qubit(x[2], x[3]))
        return -abs(np.vdot(prod, psi))

    ts = np.linspace(0, np.pi, grid)
    ps = np.linspace(0, 2 * np.pi, 2 * grid - 1)[:-1]
    qa = np.array([bloch_qubit(t, p) for t in ts for p in ps])
    angles = np.array([(t, p) for t in ts for p in ps])
    # overlap <a (x) b|psi> = sum_ij conj(a_i) conj(b_j) psi_ij
    M = qa.conj() @ psi.reshape(2, 2) @ qa.conj().T
    scores = np.abs(M).ravel()
    best = np.argsort(scores)[::-1][:5]
    rng = np.random.default_rng(seed)
    results = []
    for flat in best:
        i, j = divmod(flat, len(qa))
        x0 = np.concatenate([angles[i], angles[j]]) + 1e-3 * rng.normal(size=4)
        res = optimize.minimize(neg_overlap, x0, method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        results.append((res.fun, res.x))
    fun, x = min(results, key=lambda r: r[0])
    return float(np.sqrt(max(0.0, 2.0 * (1.0 + fun)))), tuple(x)
