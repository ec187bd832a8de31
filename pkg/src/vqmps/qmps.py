"""Quantum matrix product states: sites, chains, local tensors and contraction.

A site is one normalized state whose qubits are ordered
``[left-aux | physical | right-aux]``.  Its amplitudes reshaped to
``(2**n_l, 2**n_p, 2**n_r)`` are the classical site tensor up to a scale;
``log_scale`` records the log of that scale so a canonical tensor (Frobenius
norm ``sqrt(chi)``) can live in a unit-norm state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .hamiltonian import MpoForm
from .simulator import PAULI, StateVector, project
from .variational import AnsatzCircuit, prepare

MAX_GLOBAL_QUBITS = 14


@dataclass(frozen=True)
class QmpsSite:
    state: StateVector
    n_l: int
    n_p: int
    n_r: int
    canonical: str | None = None
    log_scale: float = 0.0

    def __post_init__(self):
        if self.n_l + self.n_p + self.n_r != self.state.n_qubits:
            raise ValueError(
                f"groups ({self.n_l}, {self.n_p}, {self.n_r}) do not cover "
                f"{self.state.n_qubits} qubits")
        if abs(self.state.norm_squared() - 1.0) > 1e-10:
            raise ValueError("site state must be normalized")
        if self.canonical not in (None, "left", "right"):
            raise ValueError(f"unknown canonical flag {self.canonical!r}")

    @property
    def n_qubits(self) -> int:
        return self.state.n_qubits

    @property
    def shape(self) -> tuple:
        return (2**self.n_l, 2**self.n_p, 2**self.n_r)

    def tensor(self) -> np.ndarray:
        """Amplitudes as ``(chi_left, d, chi_right)``."""
        return self.state.amplitudes.reshape(self.shape)

    @classmethod
    def from_tensor(cls, tensor, n_l: int, n_p: int, n_r: int, **kw) -> QmpsSite:
        """Normalize ``tensor`` into a site; the dropped norm goes into ``log_scale``."""
        amps = np.asarray(tensor, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("cannot build a site from a zero tensor")
        kw["log_scale"] = kw.get("log_scale", 0.0) + float(np.log(nrm))
        return cls(StateVector(n_l + n_p + n_r, amps / nrm), n_l, n_p, n_r, **kw)


@dataclass(frozen=True)
class QmpsChain:
    sites: tuple
    n_chi: int = field(default=1)

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        if not self.sites:
            raise ValueError("empty chain")
        if self.sites[0].n_l != 0 or self.sites[-1].n_r != 0:
            raise ValueError("chain ends must have no open auxiliary qubits")
        for i, (a, b) in enumerate(zip(self.sites, self.sites[1:])):
            if a.n_r != b.n_l:
                raise ValueError(f"aux width mismatch between sites {i} and {i + 1}")

    def __len__(self):
        return len(self.sites)

    @property
    def global_n(self) -> int:
        return sum(s.n_p for s in self.sites)

    def with_site(self, i: int, site: QmpsSite) -> QmpsChain:
        sites = list(self.sites)
        sites[i] = site
        return replace(self, sites=tuple(sites))


def bond_widths(N: int, n_chi: int) -> list:
    """Auxiliary qubits on each of the ``N - 1`` bonds, tapered near the ends.

    Bond ``k`` sits between sites ``k`` and ``k + 1``; it never needs more
    qubits than the smaller side of the cut has physical qubits.
    """
    return [min(n_chi, k + 1, N - k - 1) for k in range(N - 1)]


def random_site(n_l: int, n_p: int, n_r: int, seed=None) -> QmpsSite:
    """A pseudo-random site: a random-angle ansatz of depth ``2n`` applied to ``|0...0>``."""
    if n_p < 1:
        raise ValueError("a site needs at least one physical qubit")
    n = n_l + n_p + n_r
    ansatz = AnsatzCircuit(n, 2 * n)
    rng = np.random.default_rng(seed)
    params = rng.uniform(0, 2 * np.pi, ansatz.n_params)
    state = prepare(ansatz, params)
    return QmpsSite(state, n_l, n_p, n_r)


def random_chain(N: int, n_chi: int, seed=None) -> QmpsChain:
    widths = [0] + bond_widths(N, n_chi) + [0]
    seq = np.random.SeedSequence(seed)
    seeds = seq.spawn(N)
    sites = [random_site(widths[i], 1, widths[i + 1], seeds[i]) for i in range(N)]
    return QmpsChain(tuple(sites), n_chi)


def _bits(value: int, width: int) -> list:
    return [(value >> (width - 1 - b)) & 1 for b in range(width)]


def project_aux(site: QmpsSite, j, k) -> StateVector:
    """``<j|_l <k|_r |psi>``: the unnormalized physical state for aux values ``(j, k)``.

    ``j`` and ``k`` are bitstrings (or bit lists) of widths ``n_l`` and ``n_r``.
    """
    if isinstance(j, int):
        j = _bits(j, site.n_l)
    if isinstance(k, int):
        k = _bits(k, site.n_r)
    if len(j) != site.n_l or len(k) != site.n_r:
        raise ValueError(f"aux bitstrings must have widths ({site.n_l}, {site.n_r})")
    left = list(range(site.n_l))
    right = list(range(site.n_l + site.n_p, site.n_qubits))
    return project(site.state, left + right, list(j) + list(k))


def contract_sites(a: QmpsSite, b: QmpsSite) -> QmpsSite:
    """Merge two neighbouring sites over their shared bond into one site."""
    if a.n_r != b.n_l:
        raise ValueError(f"bond mismatch: {a.n_r} vs {b.n_l} auxiliary qubits")
    t = np.einsum("xsa,ayz->xsyz", a.tensor(), b.tensor())
    return QmpsSite.from_tensor(t, a.n_l, a.n_p + b.n_p, b.n_r,
                                log_scale=a.log_scale + b.log_scale)


def assemble_global(chain: QmpsChain) -> tuple:
    """Sum over bond values of tensor products of projected site states.

    Returns ``(state, norm)`` where ``state`` is the plain contraction of the
    stored unit-norm sites (``log_scale`` is not applied), so it is generally
    not normalized.
    """
    if chain.global_n > MAX_GLOBAL_QUBITS:
        raise ValueError(f"global state of {chain.global_n} qubits is too large")
    # partial[alpha] holds the physical state of sites so far with open bond alpha
    partial = {0: np.ones(1, dtype=complex)}
    for site in chain.sites:
        nxt = {}
        for alpha, vec in partial.items():
            for beta in range(2**site.n_r):
                piece = project_aux(site, alpha, beta).amplitudes
                if not np.any(piece):
                    continue
                term = np.kron(vec, piece)
                nxt[beta] = nxt[beta] + term if beta in nxt else term
        partial = nxt
    amps = partial.get(0)
    if amps is None:
        amps = np.zeros(2**chain.global_n, dtype=complex)
    state = StateVector(chain.global_n, amps)
    return state, state.norm()


@dataclass(frozen=True)
class LocalTensor:
    """Rank-6 site expectation tensor, stored diagonally in the MPO bond index.

    ``data[g, b, G, d, D] = <psi(G, D)| O_b |psi(g, d)>``; the full tensor is
    zero whenever the left and right bond indices differ.  At a chain end the
    open aux dimension has size 1, which is the rank-3 case.
    """

    data: np.ndarray

    @property
    def bond_size(self) -> int:
        return self.data.shape[1]

    @property
    def rank(self) -> int:
        chi_l, _, _, chi_r, _ = self.data.shape
        return 3 if (chi_l == 1) != (chi_r == 1) else 6

    def dense(self) -> np.ndarray:
        """Full ``(chi, K, chi, chi, K, chi)`` array including the zero off-diagonal blocks."""
        cl, K, _, cr, _ = self.data.shape
        out = np.zeros((cl, K, cl, cr, K, cr), dtype=self.data.dtype)
        for b in range(K):
            out[:, b, :, :, b, :] = self.data[:, b, :, :, :]
        return out


def local_tensor(site: QmpsSite, labels) -> LocalTensor:
    """Expectation tensor of one site for the Pauli labels of its MPO column.

    Each entry pairs two projected physical states; only one matrix element
    per distinct Pauli label is evaluated, then broadcast over bond indices.
    """
    if site.n_p != 1:
        raise ValueError("local tensors support one physical qubit per site")
    psi = site.tensor()
    per_label = {}
    for p in set(labels):
        opsi = np.einsum("st,atb->asb", PAULI[p], psi)
        # [g, G, d, D] with ket (g, d) and bra (G, D)
        per_label[p] = np.einsum("csd,asb->acbd", psi.conj(), opsi)
    cl, _, cr = psi.shape
    data = np.empty((cl, len(labels), cl, cr, cr), dtype=complex)
    for b, p in enumerate(labels):
        data[:, b] = per_label[p]
    return LocalTensor(data)


def chain_local_tensors(chain: QmpsChain, mpo: MpoForm) -> list:
    if mpo.n_sites != len(chain):
        raise ValueError(f"MPO has {mpo.n_sites} sites, chain {len(chain)}")
    return [local_tensor(s, mpo.site_ops[i]) for i, s in enumerate(chain.sites)]


def identity_tensors(chain: QmpsChain) -> list:
    """Local tensors of the identity observable (one bond index)."""
    return [local_tensor(s, ("I",)) for s in chain.sites]


def absorb_left(left: np.ndarray, v: LocalTensor) -> np.ndarray:
    """``L'[d, b, D] = sum_{g, G} L[g, b, G] V[g, b, G, d, D]``."""
    return np.einsum("gbh,gbhde->dbe", left, v.data)


def absorb_right(right: np.ndarray, v: LocalTensor) -> np.ndarray:
    """``R'[g, b, G] = sum_{d, D} V[g, b, G, d, D] R[d, b, D]``."""
    return np.einsum("gbhde,dbe->gbh", v.data, right)


def contract_expectation(tensors, coefficients, direction: str = "left",
                         keep_imag: bool = False):
    """Contract a chain of local tensors into ``sum_b c_b <Psi|P_b|Psi>``.

    The imaginary residual is dropped unless ``keep_imag``.
    """
    coefficients = np.asarray(coefficients)
    K = coefficients.size
    for i, (a, b) in enumerate(zip(tensors, tensors[1:])):
        if a.data.shape[3] != b.data.shape[0] or a.bond_size != b.bond_size:
            raise ValueError(f"dimension mismatch between local tensors {i} and {i + 1}")
    if tensors[0].bond_size != K:
        raise ValueError(f"{K} coefficients for bond size {tensors[0].bond_size}")
    edge = np.ones((1, K, 1), dtype=complex)
    if direction == "left":
        acc = edge
        for v in tensors:
            acc = absorb_left(acc, v)
    else:
        acc = edge
        for v in reversed(tensors):
            acc = absorb_right(acc, v)
    value = complex(np.sum(coefficients * acc[0, :, 0]))
    return value if keep_imag else value.real
