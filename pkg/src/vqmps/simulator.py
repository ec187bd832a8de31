"""Dense state-vector simulation.

Qubit 0 is the most significant bit of the amplitude index, so the state of
``n`` qubits reshaped to ``(2,) * n`` has qubit ``q`` on axis ``q``.

The single-qubit rotation convention is ``RY(theta) = exp(-i theta Y / 2)``::

    RY(theta) = [[cos(theta/2), -sin(theta/2)],
                 [sin(theta/2),  cos(theta/2)]]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MAX_QUBITS = 16

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

GATE_ARITY = {"ry": 1, "h": 1, "x": 1, "y": 1, "z": 1, "cnot": 2}


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


@dataclass
class StateVector:
    """Amplitudes of an ``n_qubits`` register, length ``2**n_qubits``."""

    n_qubits: int
    amplitudes: np.ndarray
    normalized: bool = field(default=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes).reshape(-1)
        if not 0 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [0, {MAX_QUBITS}], got {self.n_qubits}")
        if self.amplitudes.size != 2**self.n_qubits:
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got {self.amplitudes.size}"
            )
        if self.normalized and abs(self.norm_squared() - 1.0) > 1e-10:
            raise ValueError("state flagged as normalized has squared norm "
                             f"{self.norm_squared():.3e}")

    @classmethod
    def zeros(cls, n_qubits: int) -> StateVector:
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps, normalized=True)

    @classmethod
    def basis(cls, bits: str) -> StateVector:
        """Computational basis state from a bitstring such as ``"010"``."""
        n = len(bits)
        amps = np.zeros(2**n, dtype=complex)
        amps[int(bits, 2) if n else 0] = 1.0
        return cls(n, amps, normalized=True)

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = True) -> StateVector:
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size)))
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps, normalized=normalize)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def norm(self) -> float:
        return float(np.sqrt(self.norm_squared()))

    def tensor(self) -> np.ndarray:
        """View of the amplitudes with one axis per qubit."""
        return self.amplitudes.reshape((2,) * self.n_qubits)


@dataclass(frozen=True)
class Gate:
    """A gate of kind ``ry``, ``h``, ``cnot``, ``x``, ``y`` or ``z``.

    ``targets`` lists qubit indices; for ``cnot`` it is ``(control, target)``.
    """

    kind: str
    targets: tuple
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != GATE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {GATE_ARITY[self.kind]} target(s), "
                             f"got {len(self.targets)}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"duplicate targets {self.targets}")

    def matrix(self) -> np.ndarray:
        """The gate's 2x2 (or 4x4, for cnot) unitary."""
        if self.kind == "ry":
            return ry_matrix(self.angle).astype(complex)
        if self.kind == "cnot":
            m = np.eye(4, dtype=complex)
            m[2:, 2:] = X
            return m
        return {"h": H, "x": X, "y": Y, "z": Z}[self.kind]


@dataclass(frozen=True)
class PauliString:
    """``coefficient * P_0 (x) P_1 (x) ...`` with ``ops`` a string over ``IXYZ``."""

    coefficient: float
    ops: str

    def __post_init__(self):
        if set(self.ops) - set("IXYZ"):
            raise ValueError(f"invalid Pauli label {self.ops!r}")
        if np.iscomplexobj(self.coefficient) and np.imag(self.coefficient) != 0:
            raise ValueError("Pauli coefficients must be real")
        object.__setattr__(self, "coefficient", float(np.real(self.coefficient)))

    @property
    def n_qubits(self) -> int:
        return len(self.ops)

    def support(self) -> dict:
        """Non-identity positions as ``{qubit: label}``."""
        return {q: p for q, p in enumerate(self.ops) if p != "I"}

    @classmethod
    def from_support(cls, coefficient: float, n_qubits: int, support: dict) -> PauliString:
        ops = ["I"] * n_qubits
        for q, p in support.items():
            ops[q] = p
        return cls(coefficient, "".join(ops))


def apply_1q(arr: np.ndarray, mat: np.ndarray, qubit: int, n: int) -> np.ndarray:
    """Apply a 2x2 matrix to ``qubit`` of a batch of raw amplitude arrays.

    ``arr`` has shape ``(..., 2**n)``; the leading axes are batch axes.
    """
    lead = arr.shape[:-1]
    view = arr.reshape(lead + (2**qubit, 2, 2 ** (n - qubit - 1)))
    return np.matmul(mat, view).reshape(arr.shape)


def apply_matrix(arr: np.ndarray, mat: np.ndarray, qubits, n: int) -> np.ndarray:
    """Apply a ``2**k x 2**k`` matrix on the ordered ``qubits`` of raw amplitudes."""
    qubits = list(qubits)
    k = len(qubits)
    lead = arr.shape[:-1]
    t = arr.reshape(lead + (2,) * n)
    nb = len(lead)
    axes = [nb + q for q in qubits]
    t = np.moveaxis(t, axes, list(range(nb, nb + k)))
    moved_shape = t.shape
    t = t.reshape(lead + (2**k, -1))
    t = np.matmul(mat, t).reshape(moved_shape)
    t = np.moveaxis(t, list(range(nb, nb + k)), axes)
    return t.reshape(arr.shape)


@lru_cache(maxsize=None)
def cnot_permutation(pairs: tuple, n: int) -> np.ndarray:
    """Index permutation realizing a product of CNOTs given as (control, target) pairs.

    Using ``new = old[perm]`` applies the CNOTs in the listed order.
    """
    idx = np.arange(2**n)
    src = idx.copy()
    for c, t in pairs:
        cbit = 1 << (n - 1 - c)
        tbit = 1 << (n - 1 - t)
        flip = np.where(src & cbit, src ^ tbit, src)
        src = flip
    # src[i] is the image of basis state i; invert to a gather permutation
    perm = np.empty_like(src)
    perm[src] = idx
    return perm


def _check_targets(state: StateVector, targets) -> None:
    for t in targets:
        if not 0 <= t < state.n_qubits:
            raise ValueError(f"target {t} out of range for {state.n_qubits} qubits")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    _check_targets(state, gate.targets)
    n = state.n_qubits
    amps = state.amplitudes
    if gate.kind == "cnot":
        perm = cnot_permutation((gate.targets,), n)
        out = amps[perm]
    else:
        out = apply_1q(amps.astype(complex, copy=False), gate.matrix(), gate.targets[0], n)
    return StateVector(n, out, normalized=state.normalized)


def apply_pauli(state: StateVector, p: PauliString) -> np.ndarray:
    """Raw amplitudes of ``P|state>`` without the coefficient."""
    if p.n_qubits != state.n_qubits:
        raise ValueError(f"Pauli string on {p.n_qubits} qubits, state on {state.n_qubits}")
    out = state.amplitudes.astype(complex)
    for q, label in p.support().items():
        out = apply_1q(out, PAULI[label], q, state.n_qubits)
    return out


def pauli_expectation(state: StateVector, p: PauliString, check_norm: bool = True) -> float:
    if check_norm and abs(state.norm_squared() - 1.0) > 1e-10:
        raise ValueError("pauli_expectation expects a normalized state")
    val = np.vdot(state.amplitudes, apply_pauli(state, p))
    return float(p.coefficient * val.real)


def project(state: StateVector, qubits, bits) -> StateVector:
    """Unnormalized ``<bits|_qubits |state>`` on the surviving qubits, order preserved."""
    qubits = [int(q) for q in qubits]
    if isinstance(bits, str):
        bits = [int(b) for b in bits]
    bits = list(bits)
    if len(bits) != len(qubits):
        raise ValueError("bits and qubits differ in length")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubits {qubits}")
    _check_targets(state, qubits)
    index = [slice(None)] * state.n_qubits
    for q, b in zip(qubits, bits):
        if b not in (0, 1):
            raise ValueError(f"invalid bit {b}")
        index[q] = b
    sub = state.tensor()[tuple(index)]
    return StateVector(state.n_qubits - len(qubits), np.array(sub).reshape(-1))


def inner(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def gate_unitary(gate: Gate, n: int) -> np.ndarray:
    """Explicit ``2**n x 2**n`` unitary of a gate, built by Kronecker products."""
    if gate.kind == "cnot":
        c, t = gate.targets
        p0 = np.diag([1, 0]).astype(complex)
        p1 = np.diag([0, 1]).astype(complex)
        a = [I2] * n
        b = [I2] * n
        a[c] = p0
        b[c] = p1
        b[t] = X
        return _kron_all(a) + _kron_all(b)
    ops = [I2] * n
    ops[gate.targets[0]] = gate.matrix()
    return _kron_all(ops)


def _kron_all(mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out
