"""Quantum geometric tensor, Fisher information and natural-gradient steps.

Derivatives default to central finite differences with step ``h = 1e-5``.
For circuits an exact generator-insertion route (``method="exact"``) is
available and serves as a cross-check.
"""

import numpy as np

from .circuits import apply, expectation, parameter_shift_grad, state_derivatives
from .states import check_density, zero_state

FD_STEP = 1e-5
SLD_CUTOFF = 1e-12
RANK_THRESHOLD = 1e-8


class SingularMetricError(np.linalg.LinAlgError):
    """The natural-gradient system is singular; pass ``lam_reg > 0``."""


def _central_difference(func, theta, h):
    theta = np.asarray(theta, dtype=float).ravel()
    out = []
    for k in range(theta.size):
        step = np.zeros_like(theta)
        step[k] = h
        out.append((np.asarray(func(theta + step)) - np.asarray(func(theta - step))) / (2 * h))
    return out


def state_jacobian(circuit, theta, state=None, h=FD_STEP, method="fd"):
    """Raw ``|d_k psi>`` including global phase; array of shape ``(P, 2**n)``.

    ``method="fd"`` uses central differences on the full statevector,
    ``method="exact"`` inserts ``-i G`` at each rotation.
    """
    if state is None:
        state = zero_state(circuit.num_qubits)
    dim = 1 << circuit.num_qubits
    if circuit.num_params == 0:
        return np.zeros((0, dim), dtype=complex)
    if method == "exact":
        return state_derivatives(circuit, theta, state)
    if method != "fd":
        raise ValueError(f"unknown derivative method {method!r}")
    cols = _central_difference(lambda t: apply(circuit, t, state), theta, h)
    return np.array(cols)


def qgt_from_jacobian(psi, jac):
    """``G_ij = <d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>``."""
    jac = np.asarray(jac, dtype=complex)
    inner = jac.conj() @ jac.T
    a = jac.conj() @ psi
    G = inner - np.outer(a, a.conj())
    return 0.5 * (G + G.conj().T)


def quantum_geometric_tensor(circuit, theta, state=None, h=FD_STEP, method="fd"):
    """Hermitian QGT; the real part is the Fubini-Study metric, the imaginary part the Berry curvature."""
    if state is None:
        state = zero_state(circuit.num_qubits)
    psi = apply(circuit, theta, state)
    return qgt_from_jacobian(psi, state_jacobian(circuit, theta, state, h, method))


def fs_metric(circuit, theta, state=None, h=FD_STEP, method="fd"):
    return quantum_geometric_tensor(circuit, theta, state, h, method).real.copy()


def qfi_pure(circuit, theta, state=None, h=FD_STEP, method="fd"):
    """Pure-state quantum Fisher information, ``4 * fs_metric``."""
    return 4.0 * fs_metric(circuit, theta, state, h, method)


def berry_curvature(circuit, theta, state=None, h=FD_STEP, method="fd"):
    return quantum_geometric_tensor(circuit, theta, state, h, method).imag.copy()


def qfi_mixed(rho_family, theta, h=FD_STEP, cutoff=SLD_CUTOFF):
    """Quantum Fisher information of a density-matrix family via SLD operators.

    ``rho_family`` maps a parameter vector to a density matrix. In the
    eigenbasis of ``rho`` the SLDs are
    ``(L_mu)_ij = 2 <i|d_mu rho|j> / (l_i + l_j)`` for ``l_i + l_j > cutoff``
    and zero otherwise, and ``J = Re Tr[rho (L_mu L_nu + L_nu L_mu) / 2]``.

    Returns ``(J, slds)`` with the SLDs in the computational basis.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    rho = check_density(rho_family(theta))
    drho = _central_difference(rho_family, theta, h)
    lam, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    denom = lam[:, None] + lam[None, :]
    keep = denom > cutoff
    safe = np.where(keep, denom, 1.0)
    slds = []
    for d in drho:
        d_eig = V.conj().T @ d @ V
        L = np.where(keep, 2.0 * d_eig / safe, 0.0)
        L = V @ L @ V.conj().T
        slds.append(0.5 * (L + L.conj().T))
    P = len(slds)
    J = np.zeros((P, P))
    for mu in range(P):
        for nu in range(mu, P):
            anti = 0.5 * (slds[mu] @ slds[nu] + slds[nu] @ slds[mu])
            J[mu, nu] = J[nu, mu] = np.trace(rho @ anti).real
    return J, slds


def circuit_density_family(circuit, state=None):
    """``theta -> |psi(theta)><psi(theta)|`` for use with :func:`qfi_mixed`."""
    if state is None:
        state = zero_state(circuit.num_qubits)

    def family(theta):
        psi = apply(circuit, theta, state)
        return np.outer(psi, psi.conj())

    return family


def classical_fisher(p_family, theta, h=FD_STEP):
    """Fisher information ``F_mn = sum_x d_m p_x d_n p_x / p_x`` by central differences."""
    theta = np.asarray(theta, dtype=float).ravel()
    p = np.asarray(p_family(theta), dtype=float)
    zero = np.flatnonzero(p <= 0)
    if zero.size:
        raise ValueError(f"zero-probability outcome at index {int(zero[0])}")
    dp = np.array(_central_difference(p_family, theta, h))
    F = (dp / p) @ dp.T
    return 0.5 * (F + F.T)


def natural_gradient_step(theta, grad, metric, eta, lam_reg=0.0):
    """``theta - eta * (metric + lam_reg I)^{-1} grad`` via a symmetric solve."""
    theta = np.asarray(theta, dtype=float)
    grad = np.asarray(grad, dtype=float)
    metric = np.asarray(metric, dtype=float)
    if grad.shape != theta.shape or metric.shape != (theta.size, theta.size):
        raise ValueError("shape mismatch between theta, grad and metric")
    A = 0.5 * (metric + metric.T) + lam_reg * np.eye(theta.size)
    w = np.linalg.eigvalsh(A) if theta.size else np.zeros(0)
    if theta.size and w[0] <= 1e-14 * max(1.0, abs(w[-1])):
        raise SingularMetricError(
            f"metric system is singular (min eigenvalue {w[0]:.3g}); use lam_reg > 0")
    return theta - eta * np.linalg.solve(A, grad)


def tangent_rank(circuit, theta, state=None, threshold=RANK_THRESHOLD, method="fd"):
    """Number of Fubini-Study metric eigenvalues above ``threshold``."""
    w = np.linalg.eigvalsh(fs_metric(circuit, theta, state, method=method))
    return int(np.sum(w > threshold))


def tangent_rank_draws(circuit, state=None, draws=20, seed=0, threshold=RANK_THRESHOLD,
                       method="fd"):
    """Per-draw tangent ranks at ``draws`` parameter vectors uniform in [0, 2 pi)."""
    rng = np.random.default_rng(seed)
    return [tangent_rank(circuit, rng.uniform(0, 2 * np.pi, circuit.num_params),
                         state, threshold, method)
            for _ in range(draws)]


def minimize_expectation(circuit, obs, theta0, optimizer="vanilla", eta=0.1, epochs=200,
                         lam_reg=1e-6, target=None, state=None):
    """Plain or quantum-natural gradient descent on ``<psi(theta)|O|psi(theta)>``.

    Gradients come from the parameter-shift rule; the natural step
    preconditions with the Fubini-Study metric. Stops early once the loss
    drops below ``target``. Returns ``(theta, losses)`` where ``losses[0]``
    is the initial loss.
    """
    if optimizer not in ("vanilla", "natural_gradient"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    if state is None:
        state = zero_state(circuit.num_qubits)
    theta = np.asarray(theta0, dtype=float).copy()
    losses = [expectation(apply(circuit, theta, state), obs)]
    for _ in range(epochs):
        if target is not None and losses[-1] < target:
            break
        grad = parameter_shift_grad(circuit, theta, obs, state)
        if optimizer == "vanilla":
            theta = theta - eta * grad
        else:
            theta = natural_gradient_step(theta, grad, fs_metric(circuit, theta, state),
                                          eta, lam_reg)
        losses.append(expectation(apply(circuit, theta, state), obs))
    return theta, losses
