"""Independent classical references.

Nothing here reuses the qMPS contraction code: dense matrices are built by
Kronecker products, MPS contractions and the one-site DMRG are written
directly against rank-3 tensors ``(chi_left, d, chi_right)``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .hamiltonian import PauliSum
from .simulator import StateVector
from .variational import OptimizerConfig, vqe_ground

logger = logging.getLogger(__name__)

MAX_EXACT_QUBITS = 12

_P = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1j], [1j, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


def kron_matrix(h: PauliSum) -> np.ndarray:
    """Dense matrix of a Pauli sum from sparse Kronecker products."""
    n = h.n_qubits
    out = sp.csr_matrix((2**n, 2**n), dtype=complex)
    for term in h.terms:
        block = sp.identity(1, dtype=complex, format="csr")
        for p in term.ops:
            block = sp.kron(block, sp.csr_matrix(_P[p]), format="csr")
        out = out + term.coefficient * block
    mat = out.toarray()
    if not np.any(mat.imag):
        mat = mat.real
    return mat


def exact_ground(h: PauliSum) -> tuple:
    """Lowest eigenpair ``(energy, StateVector)`` by dense diagonalization."""
    if h.n_qubits > MAX_EXACT_QUBITS:
        raise ValueError(f"{h.n_qubits} qubits exceed the dense limit of {MAX_EXACT_QUBITS}")
    w, v = scipy.linalg.eigh(kron_matrix(h), subset_by_index=[0, 0])
    return float(w[0]), StateVector(h.n_qubits, v[:, 0].astype(complex), normalized=True)


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2 / (||a||^2 ||b||^2)``."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("fidelity needs states of equal size")
    na, nb = a.norm_squared(), b.norm_squared()
    if na == 0 or nb == 0:
        raise ValueError("fidelity of a zero vector is undefined")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2 / (na * nb))


def schmidt(state: StateVector, n_A: int, n_B: int) -> np.ndarray:
    """Schmidt coefficients (descending) of the cut ``n_A | n_B``."""
    if n_A + n_B != state.n_qubits:
        raise ValueError("cut does not cover the state")
    m = state.amplitudes.reshape(2**n_A, 2**n_B)
    return np.linalg.svd(m, compute_uv=False)


@dataclass
class ClassicalMps:
    """Open-boundary MPS with tensors indexed ``(chi_left, d, chi_right)``."""

    tensors: list
    canonical: list | None = None

    def __post_init__(self):
        self.tensors = [np.asarray(t) for t in self.tensors]
        if self.canonical is None:
            self.canonical = [None] * len(self.tensors)
        for i, (a, b) in enumerate(zip(self.tensors, self.tensors[1:])):
            if a.shape[2] != b.shape[0]:
                raise ValueError(f"bond mismatch between tensors {i} and {i + 1}")

    @classmethod
    def from_chain(cls, chain) -> ClassicalMps:
        """Copy the raw site tensors of a qMPS chain."""
        return cls([s.tensor().copy() for s in chain.sites])

    def to_dense(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)  # (physical so far, open bond)
        for t in self.tensors:
            cl, d, cr = t.shape
            out = np.tensordot(out, t, axes=([1], [0])).reshape(-1, cr)
        return out[:, 0]

    def expectation(self, mpo: list) -> complex:
        """``<psi|W|psi>`` for an MPO given as ``(w_l, w_r, d, d)`` tensors."""
        env = np.ones((1, 1, 1), dtype=complex)
        for t, w in zip(self.tensors, mpo):
            env = np.einsum("awb,asc,wvts,btd->cvd", env, t, w, t.conj(), optimize=True)
        return complex(env[0, 0, 0])


def svd_canonicalize(tensor: np.ndarray, side: str) -> tuple:
    """Split a site tensor into an isometry and the factor to push onward.

    Returns ``(isometry, rest)`` with ``tensor = isometry . rest`` (left) or
    ``rest . isometry`` (right), contracted over the shared bond.
    """
    cl, d, cr = tensor.shape
    if side == "left":
        q, r = np.linalg.qr(tensor.reshape(cl * d, cr))
        return q.reshape(cl, d, q.shape[1]), r
    if side == "right":
        q, r = np.linalg.qr(tensor.reshape(cl, d * cr).T)
        return q.T.reshape(q.shape[1], d, cr), r.T
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def left_canonicalize(mps: ClassicalMps) -> ClassicalMps:
    """Left-canonical form of the same state (the last tensor keeps the norm)."""
    tensors = [t.copy() for t in mps.tensors]
    for i in range(len(tensors) - 1):
        q, r = svd_canonicalize(tensors[i], "left")
        tensors[i] = q
        tensors[i + 1] = np.tensordot(r, tensors[i + 1], axes=([1], [0]))
    flags = ["left"] * (len(tensors) - 1) + [None]
    return ClassicalMps(tensors, flags)


def pauli_sum_mpo(h: PauliSum) -> list:
    """W-matrix MPO as the direct sum of one bond-dimension-1 MPO per term."""
    K, n = len(h.terms), h.n_qubits
    mpo = []
    for i in range(n):
        wl = 1 if i == 0 else K
        wr = 1 if i == n - 1 else K
        w = np.zeros((wl, wr, 2, 2), dtype=complex)
        for b, term in enumerate(h.terms):
            op = _P[term.ops[i]]
            if i == n - 1:
                op = term.coefficient * op
            w[0 if wl == 1 else b, 0 if wr == 1 else b] = op
        mpo.append(w)
    return mpo


def _bond_dims(N: int, chi: int) -> list:
    return [min(chi, 2**k, 2 ** (N - k)) for k in range(N + 1)]


def _lowest(heff: np.ndarray) -> tuple:
    heff = (heff + heff.conj().T) / 2
    w, v = scipy.linalg.eigh(heff, subset_by_index=[0, 0])
    return float(w[0]), v[:, 0]


def classical_dmrg(h: PauliSum, chi: int, sweeps: int = 200, tol: float = 1e-12,
                   seed=0, return_mps: bool = False):
    """One-site DMRG with fixed bond dimensions ``min(chi, 2**k, 2**(N-k))``.

    Sweeps left to right (sites ``0..N-2``) then right to left (``N-1..1``)
    until the energy changes by less than ``tol`` over a full round.
    """
    N = h.n_qubits
    if N < 2:
        raise ValueError("DMRG needs at least two sites")
    rng = np.random.default_rng(seed)
    dims = _bond_dims(N, chi)
    tensors = [rng.normal(size=(dims[i], 2, dims[i + 1])) + 0j for i in range(N)]
    # right-canonicalize so the first left-to-right pass starts in gauge
    for i in range(N - 1, 0, -1):
        q, r = svd_canonicalize(tensors[i], "right")
        tensors[i] = q
        tensors[i - 1] = np.tensordot(tensors[i - 1], r, axes=([2], [0]))
    tensors[0] /= np.linalg.norm(tensors[0])
    mpo = pauli_sum_mpo(h)

    def grow_left(env, t, w):
        return np.einsum("awb,asc,wvts,btd->cvd", env, t, w, t.conj(), optimize=True)

    def grow_right(env, t, w):
        return np.einsum("cvd,asc,wvts,btd->awb", env, t, w, t.conj(), optimize=True)

    edge = np.ones((1, 1, 1), dtype=complex)
    right_envs = [None] * (N + 1)
    right_envs[N] = edge
    for i in range(N - 1, 0, -1):
        right_envs[i] = grow_right(right_envs[i + 1], tensors[i], mpo[i])
    left_envs = [None] * (N + 1)
    left_envs[0] = edge

    def local_min(i):
        le, re, w = left_envs[i], right_envs[i + 1], mpo[i]
        cl, d, cr = tensors[i].shape
        # ket indices (a, s, c) on columns, bra indices (b, t, d) on rows
        heff = np.einsum("awb,wvts,cvd->btdasc", le, w, re, optimize=True)
        heff = heff.reshape(cl * d * cr, cl * d * cr)
        return _lowest(heff)

    energy, previous = np.inf, np.inf
    history = []
    for _ in range(sweeps):
        for i in range(N - 1):
            energy, vec = local_min(i)
            history.append(energy)
            q, r = svd_canonicalize(vec.reshape(tensors[i].shape), "left")
            tensors[i] = q
            tensors[i + 1] = np.tensordot(r, tensors[i + 1], axes=([1], [0]))
            left_envs[i + 1] = grow_left(left_envs[i], tensors[i], mpo[i])
        for i in range(N - 1, 0, -1):
            energy, vec = local_min(i)
            history.append(energy)
            q, r = svd_canonicalize(vec.reshape(tensors[i].shape), "right")
            tensors[i] = q
            tensors[i - 1] = np.tensordot(tensors[i - 1], r, axes=([2], [0]))
            right_envs[i] = grow_right(right_envs[i + 1], tensors[i], mpo[i])
        if abs(previous - energy) < tol:
            break
        previous = energy
    if return_mps:
        return energy, ClassicalMps(tensors), history
    return energy


def full_vqe_baseline(h: PauliSum, config: OptimizerConfig | None = None,
                      depth: int | None = None) -> float:
    """Full-register VQE with ``depth = N`` single-RY layers (300 iterations by default)."""
    if h.n_qubits > MAX_EXACT_QUBITS:
        raise ValueError(f"{h.n_qubits} qubits exceed the simulation limit")
    config = config or OptimizerConfig()
    return vqe_ground(kron_matrix(h), h.n_qubits, depth or h.n_qubits, config).energy


def fixture_key(model: str, N: int, delta: float, J: float, h: float, chi, seed) -> str:
    return f"{model}|N={N}|delta={delta:g}|J={J:g}|h={h:g}|chi={chi}|seed={seed}"


def load_fixtures(path) -> dict:
    path = Path(path)
    if not path.exists():
        return {}
    return json.loads(path.read_text())


def save_fixtures(path, fixtures: dict) -> None:
    Path(path).write_text(json.dumps(fixtures, indent=1, sort_keys=True) + "\n")
