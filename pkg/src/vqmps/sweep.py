"""DMRG-style sweeps over a qMPS chain with one variational solve per site.

Sites are indexed from 0.  ``L_i`` contracts the local tensors of sites
``0..i-1`` and ``R_i`` those of sites ``i+1..m-1``; both have shape
``(chi, K, chi)`` with the ket index first.  Energies are always generalized
Rayleigh quotients ``<v|H_eff|v> / <v|N_eff|v>`` so an imperfect gauge only
costs accuracy, never correctness.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .canonical import (
    DEFAULT_RESHAPE_CONFIG,
    DEFAULT_SVD_CONFIG,
    canonicalize_site,
    exact_canonicalize_site,
)
from .hamiltonian import MpoForm, PauliSum, to_mpo
from .qmps import (
    LocalTensor,
    QmpsChain,
    QmpsSite,
    absorb_left,
    absorb_right,
    chain_local_tensors,
    identity_tensors,
    local_tensor,
    random_chain,
)
from .simulator import I2
from .variational import OptimizerConfig, vqe_ground

logger = logging.getLogger(__name__)

RIGHT_TO_LEFT = "right_to_left"
LEFT_TO_RIGHT = "left_to_right"
# canonical form a site is left in after an update in each sweep direction
TARGET = {RIGHT_TO_LEFT: "right", LEFT_TO_RIGHT: "left"}


def _edge(K: int) -> np.ndarray:
    return np.ones((1, K, 1), dtype=complex)


@dataclass(frozen=True)
class Environment:
    left: np.ndarray
    right: np.ndarray
    site_index: int


def environments(tensors, i: int) -> Environment:
    """Contract everything left and right of site ``i`` from scratch."""
    m = len(tensors)
    if not 0 <= i < m:
        raise IndexError(f"site {i} outside chain of length {m}")
    K = tensors[0].bond_size
    left = _edge(K)
    for v in tensors[:i]:
        left = absorb_left(left, v)
    right = _edge(K)
    for v in reversed(tensors[i + 1:]):
        right = absorb_right(right, v)
    return Environment(left, right, i)


class EnvironmentCache:
    """Incrementally maintained ``L_i`` / ``R_i`` for a list of local tensors.

    Replacing tensor ``i`` invalidates ``L_j`` for ``j > i`` and ``R_j`` for
    ``j < i``; missing environments are rebuilt from the nearest cached one.
    """

    def __init__(self, tensors):
        self.tensors = list(tensors)
        K = self.tensors[0].bond_size
        self._left = {0: _edge(K)}
        self._right = {len(self.tensors) - 1: _edge(K)}

    def __len__(self):
        return len(self.tensors)

    def replace(self, i: int, v: LocalTensor) -> None:
        self.tensors[i] = v
        self._left = {j: e for j, e in self._left.items() if j <= i}
        self._right = {j: e for j, e in self._right.items() if j >= i}

    def left(self, i: int) -> np.ndarray:
        j = max(k for k in self._left if k <= i)
        env = self._left[j]
        for k in range(j, i):
            env = absorb_left(env, self.tensors[k])
            self._left[k + 1] = env
        return env

    def right(self, i: int) -> np.ndarray:
        j = min(k for k in self._right if k >= i)
        env = self._right[j]
        for k in range(j, i, -1):
            env = absorb_right(env, self.tensors[k])
            self._right[k - 1] = env
        return env

    def environment(self, i: int) -> Environment:
        if not 0 <= i < len(self.tensors):
            raise IndexError(f"site {i} outside chain of length {len(self.tensors)}")
        return Environment(self.left(i), self.right(i), i)

    def expectation(self, i: int, coefficients) -> float:
        """``sum_b c_b L_i V_i R_i`` evaluated around site ``i``."""
        acc = absorb_left(self.left(i), self.tensors[i])
        value = np.einsum("b,dbe,dbe->", np.asarray(coefficients), acc, self.right(i))
        return float(value.real)


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Hermitian matrix over the site state, indexed ``(left-aux, physical, right-aux)``."""

    matrix: np.ndarray
    shape: tuple

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))


def effective_hamiltonian(env: Environment, mpo_site, coefficients) -> EffectiveHamiltonian:
    """``H[(G,S,D),(g,s,d)] = sum_b c_b L[g,b,G] O_b[S,s] R[d,b,D]``, symmetrized.

    ``mpo_site`` is the ``(K, d, d)`` stack of site operators; the term
    coefficients are applied here, once.
    """
    ops = np.asarray(mpo_site)
    c = np.asarray(coefficients)
    K = ops.shape[0]
    if env.left.shape[1] != K or env.right.shape[1] != K or c.size != K:
        raise ValueError("environment, operator stack and coefficients disagree on K")
    h = np.einsum("gbG,bSs,dbD,b->GSDgsd", env.left, ops, env.right, c, optimize=True)
    shape = (env.left.shape[0], ops.shape[1], env.right.shape[0])
    dim = int(np.prod(shape))
    mat = h.reshape(dim, dim)
    return EffectiveHamiltonian((mat + mat.conj().T) / 2, shape)


def norm_matrix(env: Environment) -> EffectiveHamiltonian:
    """Effective matrix of the identity observable (the metric of the site problem)."""
    return effective_hamiltonian(env, I2[None].astype(complex), np.ones(1))


def rayleigh(v: np.ndarray, heff: np.ndarray, neff: np.ndarray) -> float:
    return float(np.real(np.vdot(v, heff @ v)) / np.real(np.vdot(v, neff @ v)))


def generalized_ground(heff: np.ndarray, neff: np.ndarray, cutoff: float = 1e-12) -> tuple:
    """Lowest ``(value, vector)`` of ``H v = lambda N v`` restricted to the range of ``N``."""
    w, q = scipy.linalg.eigh(neff)
    keep = w > cutoff * max(w[-1], 0.0)
    if not np.any(keep):
        raise ValueError("norm matrix vanishes")
    t = q[:, keep] / np.sqrt(w[keep])
    lam, u = scipy.linalg.eigh(t.conj().T @ heff @ t, subset_by_index=[0, 0])
    return float(lam[0]), t @ u[:, 0]


@dataclass
class SweepConfig:
    """Settings shared by every site update of a run.

    ``solver`` is ``"vqe"`` (variational site solve) or ``"exact"`` (dense
    generalized eigensolver).  ``canonicalizer`` is ``"variational"`` (qSVD
    then reshape) or ``"exact"`` (classical SVD); it defaults to match the
    solver.
    """

    max_sweeps: int = 20
    tol: float = 1e-5
    solver: str = "vqe"
    canonicalizer: str | None = None
    reshape: str = "variational"
    vqe: OptimizerConfig = field(default_factory=OptimizerConfig)
    vqe_depth: int | None = None
    svd_config: OptimizerConfig = field(default_factory=lambda: DEFAULT_SVD_CONFIG)
    reshape_config: OptimizerConfig = field(default_factory=lambda: DEFAULT_RESHAPE_CONFIG)
    restarts: int = 1
    warm_start: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.solver not in ("vqe", "exact"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.canonicalizer is None:
            self.canonicalizer = "exact" if self.solver == "exact" else "variational"
        if self.canonicalizer not in ("variational", "exact"):
            raise ValueError(f"unknown canonicalizer {self.canonicalizer!r}")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")


@dataclass
class UpdateRecord:
    sweep: int
    site: int
    direction: str
    energy: float  # Rayleigh quotient of the solved site state in its environment
    local_minimum: float  # exact lowest generalized eigenvalue, for diagnostics
    global_energy: float  # after the canonicalized site is installed
    residual: float
    accepted: bool
    reshape_fidelity: float = 1.0
    seconds: float = 0.0


@dataclass
class SweepReport:
    records: list
    sweep_energies: list  # best update energy within each sweep
    best_energy: float
    final_energy: float
    converged: bool
    chain: QmpsChain
    initial_energy: float

    @property
    def n_sweeps(self) -> int:
        return len(self.sweep_energies)

    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])


class Sweeper:
    """Holds a chain with its local tensors and environments between updates.

    The chain itself is immutable; each update installs a new snapshot.
    """

    def __init__(self, chain: QmpsChain, hamiltonian: PauliSum | MpoForm,
                 config: SweepConfig | None = None):
        self.config = config or SweepConfig()
        self.mpo = hamiltonian if isinstance(hamiltonian, MpoForm) else to_mpo(hamiltonian)
        if self.mpo.n_sites != len(chain):
            raise ValueError(f"Hamiltonian has {self.mpo.n_sites} sites, chain {len(chain)}")
        self.chain = chain
        self.coefficients = self.mpo.coefficients
        self.energy_envs = EnvironmentCache(chain_local_tensors(chain, self.mpo))
        self.norm_envs = EnvironmentCache(identity_tensors(chain))
        self.params = {}  # last VQE parameters per site, for warm starts
        self.last_solution = None  # (site index, uncanonicalized solved site)
        self.sweep_index = 0

    def energy(self, i: int = 0) -> float:
        """Global Rayleigh-quotient energy, contracted around site ``i``."""
        return (self.energy_envs.expectation(i, self.coefficients)
                / self.norm_envs.expectation(i, np.ones(1)))

    def site_problem(self, i: int) -> tuple:
        heff = effective_hamiltonian(self.energy_envs.environment(i),
                                     self.mpo.site_matrices(i), self.coefficients)
        neff = norm_matrix(self.norm_envs.environment(i))
        return heff, neff

    def install(self, i: int, site: QmpsSite) -> None:
        self.chain = self.chain.with_site(i, site)
        self.energy_envs.replace(i, local_tensor(site, self.mpo.site_ops[i]))
        self.norm_envs.replace(i, local_tensor(site, ("I",)))

    def canonicalize(self, site: QmpsSite, target: str):
        cfg = self.config
        if cfg.canonicalizer == "exact":
            return exact_canonicalize_site(site, target)
        return canonicalize_site(site, target, config=cfg.svd_config, reshape=cfg.reshape,
                                 restarts=cfg.restarts, reshape_config=cfg.reshape_config)

    def _vqe_config(self, i: int) -> OptimizerConfig:
        seed = int(np.random.SeedSequence([self.config.seed, self.sweep_index, i])
                   .generate_state(1)[0])
        return replace(self.config.vqe, seed=seed)

    def solve(self, i: int, heff: np.ndarray, neff: np.ndarray) -> tuple:
        """Return ``(energy, vector)`` for the site ``i`` problem."""
        if self.config.solver == "exact":
            return generalized_ground(heff, neff)
        site = self.chain.sites[i]
        depth = self.config.vqe_depth or site.n_qubits
        x0 = self.params.get(i) if self.config.warm_start else None
        res = vqe_ground(heff, site.n_qubits, depth, self._vqe_config(i), x0=x0, metric=neff)
        self.params[i] = res.params
        return res.energy, res.state.amplitudes

    def update_site(self, i: int, direction: str) -> tuple:
        """Solve, canonicalize toward ``direction`` and install site ``i``.

        Returns ``(chain, record)``.  A solve that does not improve on the
        current site is recorded and the current site is kept.
        """
        if direction not in TARGET:
            raise ValueError(f"unknown direction {direction!r}")
        start = time.perf_counter()
        old = self.chain.sites[i]
        h, n = self.site_problem(i)
        current = rayleigh(old.state.amplitudes, h.matrix, n.matrix)
        local_min, _ = generalized_ground(h.matrix, n.matrix)
        energy, vec = self.solve(i, h.matrix, n.matrix)
        accepted = energy <= current
        if not accepted:
            logger.info("site %d: solve reached %.8f above current %.8f; kept",
                        i, energy, current)
            energy, vec = current, old.state.amplitudes
        site = QmpsSite.from_tensor(vec, old.n_l, old.n_p, old.n_r)
        self.last_solution = (i, site)
        result = self.canonicalize(site, TARGET[direction])
        self.install(i, result.site)
        record = UpdateRecord(self.sweep_index, i, direction, energy, local_min,
                              self.energy(i), result.residual.residual, accepted,
                              result.reshape_fidelity, time.perf_counter() - start)
        return self.chain, record

    def left_canonicalize(self) -> None:
        for i, site in enumerate(self.chain.sites):
            self.install(i, self.canonicalize(site, "left").site)


def sweep_order(m: int, direction: str) -> list:
    """Sites visited by one sweep; the turning site is left to the next sweep."""
    if m == 1:
        return [0]
    if direction == RIGHT_TO_LEFT:
        return list(range(m - 1, 0, -1))
    return list(range(0, m - 1))


def run_vqmps(hamiltonian: PauliSum, n_chi: int, sweeps: int | None = None,
              config: SweepConfig | None = None, chain: QmpsChain | None = None) -> SweepReport:
    """Ground-state search by alternating right-to-left and left-to-right sweeps.

    Starts from a random chain (one physical qubit per site) brought into
    left-canonical form and stops when the best energy of a sweep moves by
    less than ``config.tol`` or after ``sweeps`` sweeps.  The headline is the
    best update energy; the last one is kept as ``final_energy``.
    """
    config = config or SweepConfig()
    if sweeps is not None:
        config = replace(config, max_sweeps=sweeps)
    N = hamiltonian.n_qubits
    if N < 2:
        raise ValueError("vqMPS needs at least two sites")
    if chain is None:
        chain = random_chain(N, n_chi, seed=config.seed)
    sweeper = Sweeper(chain, hamiltonian, config)
    sweeper.left_canonicalize()
    initial = sweeper.energy()
    records, sweep_energies = [], []
    converged = False
    direction = RIGHT_TO_LEFT
    for s in range(config.max_sweeps):
        sweeper.sweep_index = s
        best = np.inf
        for i in sweep_order(N, direction):
            _, rec = sweeper.update_site(i, direction)
            records.append(rec)
            best = min(best, rec.energy)
        logger.debug("sweep %d (%s): best %.10f", s, direction, best)
        sweep_energies.append(best)
        if len(sweep_energies) > 1 and abs(sweep_energies[-2] - best) < config.tol:
            converged = True
            break
        direction = LEFT_TO_RIGHT if direction == RIGHT_TO_LEFT else RIGHT_TO_LEFT
    # the canonicalized last site lost its singular values; put the solution back
    # so the returned chain carries the final energy
    i, site = sweeper.last_solution
    sweeper.install(i, site)
    return SweepReport(records, sweep_energies, float(min(r.energy for r in records)),
                       records[-1].energy, converged, sweeper.chain, initial)
