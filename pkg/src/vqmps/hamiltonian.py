"""Pauli-sum Hamiltonians and their diagonal matrix-product-operator form."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulator import PAULI, PauliString

MAX_DENSE_QUBITS = 14


class PauliSum:
    """Real-weighted sum of Pauli strings on ``n_qubits`` qubits.

    Terms with the same operator pattern are merged on construction.  Terms
    whose merged weight vanishes are dropped unless ``keep_zeros`` is set.
    """

    def __init__(self, n_qubits: int, terms=(), keep_zeros: bool = False):
        self.n_qubits = n_qubits
        merged: dict = {}
        for t in terms:
            if t.n_qubits != n_qubits:
                raise ValueError(f"term {t.ops} is not on {n_qubits} qubits")
            merged[t.ops] = merged.get(t.ops, 0.0) + t.coefficient
        self.terms = [PauliString(c, ops) for ops, c in merged.items()
                      if keep_zeros or c != 0.0]

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self):
        body = " + ".join(f"{t.coefficient:g}*{t.ops}" for t in self.terms[:6])
        more = " + ..." if len(self.terms) > 6 else ""
        return f"PauliSum({self.n_qubits}, {body}{more})"

    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms])


def build_xxz(N: int, J: float = 1.0, delta: float = 1.0, h: float = 0.0) -> PauliSum:
    """Open XXZ chain ``sum_i J(X_i X_i+1 + Y_i Y_i+1) + delta Z_i Z_i+1 + h sum_i Z_i``."""
    if N < 2:
        raise ValueError(f"XXZ chain needs at least 2 sites, got {N}")
    terms = []
    for i in range(N - 1):
        for label, c in (("X", J), ("Y", J), ("Z", delta)):
            terms.append(PauliString.from_support(c, N, {i: label, i + 1: label}))
    if h != 0:
        for i in range(N):
            terms.append(PauliString.from_support(h, N, {i: "Z"}))
    # zero-weight couplings are kept so the term count is fixed by N
    return PauliSum(N, terms, keep_zeros=True)


@dataclass(frozen=True)
class MpoForm:
    """Diagonal MPO: bond index ``beta`` carries one Pauli label per site.

    ``site_ops[i][beta]`` is the label of site ``i`` for term ``beta``; the
    coefficients sit on the last site.
    """

    n_sites: int
    site_ops: tuple
    coefficients: np.ndarray

    @property
    def bond_size(self) -> int:
        return len(self.coefficients)

    def site_matrices(self, i: int, with_coefficients: bool = False) -> np.ndarray:
        """Stack of single-qubit operators ``(K, 2, 2)`` for site ``i``."""
        mats = np.array([PAULI[p] for p in self.site_ops[i]])
        if with_coefficients:
            mats = mats * self.coefficients[:, None, None]
        return mats


def to_mpo(h: PauliSum) -> MpoForm:
    ops = tuple(tuple(t.ops[i] for t in h.terms) for i in range(h.n_qubits))
    return MpoForm(h.n_qubits, ops, h.coefficients())


def mpo_to_dense(mpo: MpoForm) -> np.ndarray:
    """Contract the diagonal MPO into a dense matrix, one bond index at a time."""
    if mpo.n_sites > MAX_DENSE_QUBITS:
        raise ValueError(f"{mpo.n_sites} sites too large for a dense matrix")
    dim = 2**mpo.n_sites
    out = np.zeros((dim, dim), dtype=complex)
    for beta in range(mpo.bond_size):
        block = np.ones((1, 1), dtype=complex)
        for i in range(mpo.n_sites):
            block = np.kron(block, PAULI[mpo.site_ops[i][beta]])
        out += mpo.coefficients[beta] * block
    return out


def dense(h: PauliSum) -> np.ndarray:
    """Dense ``2**N x 2**N`` matrix, built from bit-flip and phase patterns."""
    n = h.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"{n} qubits too large for a dense matrix (max {MAX_DENSE_QUBITS})")
    dim = 2**n
    idx = np.arange(dim)
    out = np.zeros((dim, dim), dtype=complex)
    for t in h.terms:
        flip = 0
        phase = np.ones(dim, dtype=complex)
        for q, p in t.support().items():
            bit = (idx >> (n - 1 - q)) & 1
            if p in "XY":
                flip |= 1 << (n - 1 - q)
            if p == "Z":
                phase *= 1 - 2 * bit
            elif p == "Y":
                # Y|0> = i|1>, Y|1> = -i|0>
                phase *= 1j * (1 - 2 * bit)
        out[idx ^ flip, idx] += t.coefficient * phase
    return out
