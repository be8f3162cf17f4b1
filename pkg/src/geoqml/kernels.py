"""Statevector gate kernels.

All kernels act in place on a C-contiguous ``(batch, 2**n)`` complex128 array.
Wire 0 is the most significant bit of the basis index, so for wire ``q`` the
paired amplitudes sit ``2**(n - 1 - q)`` apart.

Every kernel has a numba and a numpy implementation with identical results;
``BACKEND`` picks one at import time (see :mod:`geoqml._accel`).
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit


def wire_stride(wire, n_qubits):
    return 1 << (n_qubits - 1 - wire)


# --------------------------------------------------------------------------
# numba path

@njit(cache=True)
def _apply_1q_numba(states, m00, m01, m10, m11, stride):
    n_batch, dim = states.shape
    for b in range(n_batch):
        for base in range(0, dim, 2 * stride):
            for off in range(stride):
                i = base + off
                j = i + stride
                a = states[b, i]
                c = states[b, j]
                states[b, i] = m00 * a + m01 * c
                states[b, j] = m10 * a + m11 * c


@njit(cache=True)
def _apply_cnot_numba(states, cstride, tstride):
    n_batch, dim = states.shape
    for b in range(n_batch):
        for i in range(dim):
            if (i & cstride) and not (i & tstride):
                j = i | tstride
                tmp = states[b, i]
                states[b, i] = states[b, j]
                states[b, j] = tmp


@njit(cache=True)
def _walsh_hadamard_numba(values):
    n_batch, dim = values.shape
    h = 1
    while h < dim:
        for b in range(n_batch):
            for base in range(0, dim, 2 * h):
                for off in range(h):
                    i = base + off
                    j = i + h
                    x = values[b, i]
                    y = values[b, j]
                    values[b, i] = x + y
                    values[b, j] = x - y
        h *= 2


# --------------------------------------------------------------------------
# numpy path

def _apply_1q_numpy(states, m00, m01, m10, m11, stride):
    n_batch, dim = states.shape
    view = states.reshape(n_batch, dim // (2 * stride), 2, stride)
    a = view[:, :, 0, :].copy()
    c = view[:, :, 1, :]
    view[:, :, 0, :] = m00 * a + m01 * c
    view[:, :, 1, :] = m10 * a + m11 * c


def _apply_cnot_numpy(states, cstride, tstride):
    n_batch, dim = states.shape
    idx = np.arange(dim)
    src = np.where(idx & cstride, idx ^ tstride, idx)
    states[:] = states[:, src]


def _walsh_hadamard_numpy(values):
    n_batch, dim = values.shape
    h = 1
    while h < dim:
        view = values.reshape(n_batch, dim // (2 * h), 2, h)
        x = view[:, :, 0, :].copy()
        y = view[:, :, 1, :]
        view[:, :, 0, :] = x + y
        view[:, :, 1, :] = x - y
        h *= 2


_IMPLS = {
    "numba": (_apply_1q_numba, _apply_cnot_numba, _walsh_hadamard_numba),
    "numpy": (_apply_1q_numpy, _apply_cnot_numpy, _walsh_hadamard_numpy),
}

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def _impl(backend):
    return _IMPLS[backend or BACKEND]


def apply_1q(states, matrix, wire, n_qubits, backend=None):
    """Apply a 2x2 ``matrix`` to ``wire`` of every row of ``states`` in place."""
    m = np.asarray(matrix, dtype=np.complex128)
    _impl(backend)[0](states, m[0, 0], m[0, 1], m[1, 0], m[1, 1],
                      wire_stride(wire, n_qubits))


def apply_cnot(states, control, target, n_qubits, backend=None):
    """Apply CNOT(control -> target) to every row of ``states`` in place."""
    _impl(backend)[1](states, wire_stride(control, n_qubits),
                      wire_stride(target, n_qubits))


def walsh_hadamard(values, backend=None):
    """Unnormalized Walsh-Hadamard transform along the last axis, in place.

    Applied to basis probabilities this yields every Z-string expectation:
    entry ``s`` is ``<Z^{s_0} ... Z^{s_{n-1}}>`` with ``s`` read as a bitmask.
    """
    _impl(backend)[2](values)
