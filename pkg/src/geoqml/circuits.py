"""Exact statevector simulation of parametrized qubit circuits.

Gate convention
---------------
Rotations are ``U(theta) = exp(-i * theta * G)`` with ``G`` the Pauli X, Y or
Z on the target wire. This is the *full-angle* convention: ``RX(theta)`` here
equals the half-angle ``RX(2 * theta)`` of most circuit libraries. As a
consequence the parameter-shift rule uses an offset of ``pi / 4`` and no
prefactor::

    df/dtheta_k = f(theta + pi/4 e_k) - f(theta - pi/4 e_k)

Circuit text format
-------------------
One gate per line, whitespace separated, ``#`` starts a comment::

    QUBITS 2        # optional, otherwise max wire + 1
    PARAMS 3        # optional, otherwise max parameter index + 1
    H q0
    CNOT q0 q1
    RX q1 p0
    RZ q0 p2

Several rotations may share a parameter index.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import kernels
from .exceptions import DimensionError, ParseError
from .states import check_state, num_qubits_for, zero_state

MAX_STATE_QUBITS = 16
MAX_UNITARY_QUBITS = 10

ROTATIONS = ("RX", "RY", "RZ")
FIXED = ("H", "CNOT")
GATE_ARITY = {"RX": 1, "RY": 1, "RZ": 1, "H": 1, "CNOT": 2}

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_PAULI_1Q = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def rotation_matrix(kind, theta):
    c, s = np.cos(theta), np.sin(theta)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array([[np.exp(-1j * theta), 0], [0, np.exp(1j * theta)]])
    raise ValueError(f"not a rotation gate: {kind}")


def rotation_derivative(kind, theta):
    """``d/dtheta exp(-i theta G) = -i G exp(-i theta G)``."""
    return -1j * _PAULI_1Q[kind[1]] @ rotation_matrix(kind, theta)


@dataclass(frozen=True)
class Gate:
    kind: str
    wires: tuple
    param_index: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if len(self.wires) != GATE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {GATE_ARITY[self.kind]} wire(s), got {self.wires}")
        if len(set(self.wires)) != len(self.wires):
            raise ValueError(f"{self.kind} wires must be distinct, got {self.wires}")
        if any(w < 0 for w in self.wires):
            raise ValueError(f"negative wire index in {self.wires}")
        if self.kind in ROTATIONS and self.param_index is None:
            raise ValueError(f"{self.kind} needs a parameter index")
        if self.kind in FIXED and self.param_index is not None:
            raise ValueError(f"{self.kind} takes no parameter")
        if self.param_index is not None and self.param_index < 0:
            raise ValueError("parameter index must be non-negative")

    @property
    def is_rotation(self):
        return self.kind in ROTATIONS

    def to_text(self):
        parts = [self.kind] + [f"q{w}" for w in self.wires]
        if self.param_index is not None:
            parts.append(f"p{self.param_index}")
        return " ".join(parts)


@dataclass(frozen=True)
class ParamCircuit:
    """Ordered gate list ``U(theta) = U_L ... U_1``; ``gates[0]`` acts first."""

    num_qubits: int
    gates: tuple = ()
    num_params: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.num_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        for g in self.gates:
            if max(g.wires) >= self.num_qubits:
                raise ValueError(f"gate {g.to_text()} exceeds {self.num_qubits} qubits")
            if g.param_index is not None and g.param_index >= self.num_params:
                raise ValueError(f"gate {g.to_text()} exceeds {self.num_params} parameters")

    def __add__(self, other):
        """Sequential composition: ``self`` first, then ``other`` (parameters shared by index)."""
        if other.num_qubits != self.num_qubits:
            raise DimensionError("cannot compose circuits on different qubit counts")
        return ParamCircuit(self.num_qubits, self.gates + other.gates,
                            max(self.num_params, other.num_params))

    def gate_angles(self, theta):
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != self.num_params:
            raise DimensionError(f"expected {self.num_params} parameters, got {theta.size}")
        return np.array([theta[g.param_index] if g.is_rotation else 0.0 for g in self.gates])

    def to_text(self):
        lines = [f"QUBITS {self.num_qubits}", f"PARAMS {self.num_params}"]
        return "\n".join(lines + [g.to_text() for g in self.gates]) + "\n"


@dataclass(frozen=True)
class PauliObservable:
    """Real linear combination of Pauli strings, e.g. ``[(1.0, "ZZ"), (0.5, "XI")]``."""

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple((float(c), str(s).upper()) for c, s in self.terms)
        if not terms:
            raise ValueError("observable needs at least one term")
        n = len(terms[0][1])
        for c, s in terms:
            if len(s) != n or set(s) - set("IXYZ"):
                raise ValueError(f"invalid Pauli string {s!r}")
            if not np.isfinite(c):
                raise ValueError("coefficients must be finite")
        object.__setattr__(self, "terms", terms)

    @property
    def num_qubits(self):
        return len(self.terms[0][1])

    @classmethod
    def z(cls, wire, n_qubits):
        s = ["I"] * n_qubits
        s[wire] = "Z"
        return cls(((1.0, "".join(s)),))

    def norm_bound(self):
        return sum(abs(c) for c, _ in self.terms)


# --------------------------------------------------------------------------
# text format

def parse_circuit(text):
    """Parse the line-oriented circuit format; raises :class:`ParseError` with a line number."""
    gates = []
    declared_qubits = declared_params = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        head = tok[0].upper()
        if head in ("QUBITS", "PARAMS"):
            if len(tok) != 2 or not tok[1].isdigit():
                raise ParseError(f"expected '{head} <int>'", lineno)
            if head == "QUBITS":
                declared_qubits = int(tok[1])
            else:
                declared_params = int(tok[1])
            continue
        if head not in GATE_ARITY:
            raise ParseError(f"unknown gate {tok[0]!r}", lineno)
        arity = GATE_ARITY[head]
        expected = arity + (1 if head in ROTATIONS else 0)
        if len(tok) - 1 != expected:
            raise ParseError(f"{head} expects {expected} operand(s), got {len(tok) - 1}", lineno)
        wires = []
        for t in tok[1:1 + arity]:
            if len(t) < 2 or t[0].lower() != "q" or not t[1:].isdigit():
                raise ParseError(f"bad wire token {t!r} (expected q<int>)", lineno)
            wires.append(int(t[1:]))
        param = None
        if head in ROTATIONS:
            t = tok[-1]
            if len(t) < 2 or t[0].lower() != "p" or not t[1:].isdigit():
                raise ParseError(f"bad parameter token {t!r} (expected p<int>)", lineno)
            param = int(t[1:])
        try:
            gates.append(Gate(head, tuple(wires), param))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    n_qubits = declared_qubits
    if n_qubits is None:
        n_qubits = 1 + max((max(g.wires) for g in gates), default=0)
    n_params = declared_params
    if n_params is None:
        n_params = 1 + max((g.param_index for g in gates if g.is_rotation), default=-1)
    try:
        return ParamCircuit(n_qubits, tuple(gates), n_params)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


# --------------------------------------------------------------------------
# ansatz builders

def hardware_efficient(n_qubits, layers=3, rotations=("RY", "RZ"), entangler="ring"):
    """Layers of per-qubit rotations followed by a CNOT ring (or chain)."""
    gates = []
    p = 0
    for _ in range(layers):
        for q in range(n_qubits):
            for kind in rotations:
                gates.append(Gate(kind, (q,), p))
                p += 1
        if n_qubits > 1 and entangler != "none":
            pairs = [(q, q + 1) for q in range(n_qubits - 1)]
            if entangler == "ring" and n_qubits > 2:
                pairs.append((n_qubits - 1, 0))
            elif entangler == "ring":
                pairs.append((1, 0))
            gates.extend(Gate("CNOT", pair) for pair in pairs)
    return ParamCircuit(n_qubits, tuple(gates), p)


def euler_product(n_qubits, euler=("RZ", "RY", "RZ")):
    """Entangler-free ansatz: one Euler rotation triple per qubit."""
    return hardware_efficient(n_qubits, layers=1, rotations=euler, entangler="none")


# --------------------------------------------------------------------------
# simulation

def _apply_gate(states, gate, angle, n, backend=None):
    if gate.kind == "CNOT":
        kernels.apply_cnot(states, gate.wires[0], gate.wires[1], n, backend)
    elif gate.kind == "H":
        kernels.apply_1q(states, _H, gate.wires[0], n, backend)
    else:
        kernels.apply_1q(states, rotation_matrix(gate.kind, angle), gate.wires[0], n, backend)


def _apply_gate_adjoint(states, gate, angle, n, backend=None):
    if gate.kind == "CNOT" or gate.kind == "H":
        _apply_gate(states, gate, angle, n, backend)
    else:
        kernels.apply_1q(states, rotation_matrix(gate.kind, -angle), gate.wires[0], n, backend)


def _as_batch(state, n_qubits):
    arr = np.asarray(state, dtype=np.complex128)
    single = arr.ndim == 1
    batch = np.array(arr[None] if single else arr, dtype=np.complex128, order="C", copy=True)
    if batch.ndim != 2 or batch.shape[1] != 1 << n_qubits:
        raise DimensionError(
            f"state has {batch.shape[-1]} amplitudes, circuit needs {1 << n_qubits}")
    return batch, single


def run_angles(circuit, angles, states, start=0, stop=None, backend=None):
    """Apply ``circuit.gates[start:stop]`` with explicit per-gate angles, in place."""
    n = circuit.num_qubits
    stop = len(circuit.gates) if stop is None else stop
    for g in range(start, stop):
        _apply_gate(states, circuit.gates[g], angles[g], n, backend)
    return states


def apply(circuit, theta, state=None, backend=None):
    """Evolve ``state`` (default ``|0...0>``; vector or ``(m, 2**n)`` batch) by ``U(theta)``."""
    if circuit.num_qubits > MAX_STATE_QUBITS:
        raise DimensionError(f"state simulation capped at {MAX_STATE_QUBITS} qubits")
    if state is None:
        state = zero_state(circuit.num_qubits)
    batch, single = _as_batch(state, circuit.num_qubits)
    run_angles(circuit, circuit.gate_angles(theta), batch, backend=backend)
    return batch[0] if single else batch


def unitary_of(circuit, theta, backend=None):
    """Dense ``2**n x 2**n`` unitary; column ``i`` is ``U |i>``."""
    if circuit.num_qubits > MAX_UNITARY_QUBITS:
        raise DimensionError(f"unitary extraction capped at {MAX_UNITARY_QUBITS} qubits")
    dim = 1 << circuit.num_qubits
    rows = apply(circuit, theta, np.eye(dim, dtype=complex), backend=backend)
    return rows.T.copy()


def apply_pauli_string(states, pauli, n, backend=None):
    out = np.array(states, dtype=np.complex128, order="C", copy=True)
    for q, p in enumerate(pauli):
        if p != "I":
            kernels.apply_1q(out, _PAULI_1Q[p], q, n, backend)
    return out


def expectation(state, obs, backend=None):
    """Exact ``<psi|O|psi>`` for a vector or, row-wise, for a batch."""
    arr = np.asarray(state, dtype=complex)
    n = obs.num_qubits
    if arr.shape[-1] != 1 << n:
        raise DimensionError(f"observable acts on {n} qubits, state has {arr.shape[-1]} amplitudes")
    batch = arr[None] if arr.ndim == 1 else arr
    total = np.zeros(batch.shape[0])
    for c, s in obs.terms:
        total += c * np.einsum("bi,bi->b", batch.conj(), apply_pauli_string(batch, s, n, backend)).real
    return float(total[0]) if arr.ndim == 1 else total


def z_string_expectations(states, max_weight=None, backend=None):
    """Expectations of every Z-string of weight ``<= max_weight`` (identity excluded).

    Column order is by weight, then lexicographic in the qubit tuple. Returns
    ``(values, masks)`` where ``masks[j]`` lists the qubits of column ``j``.
    """
    states = np.atleast_2d(states)
    n = num_qubits_for(states.shape[1])
    w = n if max_weight is None else min(max_weight, n)
    probs = np.ascontiguousarray(np.abs(states) ** 2)
    kernels.walsh_hadamard(probs, backend)
    masks = z_string_masks(n, w)
    cols = [sum(1 << (n - 1 - q) for q in m) for m in masks]
    return probs[:, cols], masks


def z_string_masks(n, max_weight):
    return [m for k in range(1, max_weight + 1) for m in combinations(range(n), k)]


def parameter_shift_grad(circuit, theta, obs, state=None, backend=None):
    """Exact gradient of ``<psi(theta)|O|psi(theta)>`` by the ``pi/4`` shift rule.

    Each rotation occurrence is shifted on its own, so shared parameters
    receive the sum of their occurrences' contributions.
    """
    if state is None:
        state = zero_state(circuit.num_qubits)
    base, single = _as_batch(state, circuit.num_qubits)
    angles = circuit.gate_angles(theta)
    grad = np.zeros((base.shape[0], circuit.num_params))
    for g, gate in enumerate(circuit.gates):
        if not gate.is_rotation:
            continue
        vals = []
        for sign in (1.0, -1.0):
            shifted = angles.copy()
            shifted[g] += sign * np.pi / 4
            out = run_angles(circuit, shifted, base.copy(), backend=backend)
            vals.append(expectation(out, obs, backend))
        grad[:, gate.param_index] += vals[0] - vals[1]
    return grad[0] if single else grad


def adjoint_diag_grad(circuit, theta, states, weights, backend=None):
    """Gradient of ``sum_i <psi_i|diag(weights_i)|psi_i>`` by reverse-mode sweep.

    ``states`` are the ``(m, 2**n)`` inputs, ``weights`` the matching real
    diagonals. Returns ``(value, grad)``. Cost is linear in the gate count;
    agrees with :func:`parameter_shift_grad` to round-off.
    """
    n = circuit.num_qubits
    angles = circuit.gate_angles(theta)
    phi, _ = _as_batch(states, n)
    run_angles(circuit, angles, phi, backend=backend)
    weights = np.asarray(weights, dtype=float)
    value = float(np.sum(weights * np.abs(phi) ** 2))
    lam = np.ascontiguousarray(weights * phi)
    grad = np.zeros(circuit.num_params)
    for g in range(len(circuit.gates) - 1, -1, -1):
        gate = circuit.gates[g]
        _apply_gate_adjoint(phi, gate, angles[g], n, backend)
        if gate.is_rotation:
            mu = phi.copy()
            kernels.apply_1q(mu, rotation_derivative(gate.kind, angles[g]), gate.wires[0], n, backend)
            grad[gate.param_index] += 2.0 * np.real(np.vdot(lam, mu))
        _apply_gate_adjoint(lam, gate, angles[g], n, backend)
    return value, grad


def state_derivatives(circuit, theta, state=None, backend=None):
    """Exact ``d psi / d theta_k`` by generator insertion; shape ``(P, [m,] 2**n)``."""
    if state is None:
        state = zero_state(circuit.num_qubits)
    base, single = _as_batch(state, circuit.num_qubits)
    n = circuit.num_qubits
    angles = circuit.gate_angles(theta)
    out = np.zeros((circuit.num_params,) + base.shape, dtype=complex)
    prefix = base.copy()
    for g, gate in enumerate(circuit.gates):
        if gate.is_rotation:
            d = prefix.copy()
            kernels.apply_1q(d, rotation_derivative(gate.kind, angles[g]), gate.wires[0], n, backend)
            run_angles(circuit, angles, d, start=g + 1, backend=backend)
            out[gate.param_index] += d
        _apply_gate(prefix, gate, angles[g], n, backend)
    return out[:, 0] if single else out


# --------------------------------------------------------------------------
# kernels built from circuits

def quantum_kernel(v1, v2, circuit, theta):
    """Fidelity kernel ``|<U enc(v1) | U enc(v2)>|**2`` (squared-overlap convention)."""
    from .states import amplitude_encode, fidelity_pure

    a = apply(circuit, theta, amplitude_encode(v1))
    b = apply(circuit, theta, amplitude_encode(v2))
    return fidelity_pure(a, b)


def kernel_gram(vectors, circuit, theta):
    from .states import amplitude_encode

    states = apply(circuit, theta, amplitude_encode(np.atleast_2d(vectors)))
    G = np.abs(states.conj() @ states.T) ** 2
    return np.minimum(G, 1.0)


def check_input_state(state, circuit):
    psi = check_state(state)
    if psi.size != 1 << circuit.num_qubits:
        raise DimensionError("input state qubit count does not match circuit")
    return psi
