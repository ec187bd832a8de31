"""Variational quantum SVD, quantum reshape and canonical-form checks.

The qSVD learns two ansatz unitaries ``U_A``, ``U_B`` so that
``(U_A (x) U_B)|psi> = sum_i s_i |i, 0...0> (x) |i>`` where the larger
subsystem parks its surplus qubits in ``|0>``.  The loss counts, per basis
state, the mismatched paired qubits plus the surplus qubits left in ``|1>``::

    L = sum_q (1 - <Z_qA Z_qB>) / 2 + sum_surplus (1 - <Z_q>) / 2

so ``L = 0`` exactly at the target configuration.

Reshape turns the learned unitary back into a site state
``2**(-k/2) sum_i |i> (x) U|i, 0...0>`` with the Hadamard/CNOT circuit, or
variationally by learning a circuit that the inverse of that circuit maps
to ``|0...0>``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .qmps import QmpsSite
from .simulator import Gate, StateVector, apply_gate, apply_matrix
from .variational import (
    AnsatzCircuit,
    CircuitExpectationLoss,
    OptimizerConfig,
    minimize,
    ops_unitary,
    run_ops,
    run_ops_inverse,
)

logger = logging.getLogger(__name__)

DEFAULT_SVD_CONFIG = OptimizerConfig(max_iterations=2000, learning_rate=0.1,
                                     convergence_tol=1e-12, seed=0)

# the reshape loss weighs each flipped qubit twice, halving the stable step
DEFAULT_RESHAPE_CONFIG = OptimizerConfig(max_iterations=2000, learning_rate=0.05,
                                         convergence_tol=1e-12, seed=0)

QSVD_LOSS_THRESHOLD = 1e-2

# layers per real degree of freedom the circuit has to cover
DEPTH_FACTOR = 2.5


def sufficient_depth(n_A: int, n_B: int, factor: float = DEPTH_FACTOR) -> tuple:
    """Layer counts ``(depth_A, depth_B)`` sized to the rotations a qSVD must learn.

    The smaller side needs a full orthogonal matrix, the larger side only has
    to rotate ``2**k`` Schmidt vectors into place (a Stiefel manifold).
    """
    k = min(n_A, n_B)
    big = max(n_A, n_B)
    d, D = 2**k, 2**big
    small_dof = d * (d - 1) // 2
    big_dof = d * D - d * (d + 1) // 2
    d_small = max(2, int(np.ceil(factor * small_dof / k)))
    d_big = max(2, int(np.ceil(factor * big_dof / big)))
    return (d_small, d_big) if n_A <= n_B else (d_big, d_small)


def state_depth(n: int, factor: float = DEPTH_FACTOR) -> int:
    """Layers sized to prepare a generic real state of ``n`` qubits."""
    return max(2, int(np.ceil(factor * (2**n - 1) / n)))


def _hamming_diagonal(n_A: int, n_B: int) -> np.ndarray:
    """Per-basis-state loss weights for the qSVD target configuration."""
    n = n_A + n_B
    k = min(n_A, n_B)
    idx = np.arange(2**n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    a_bits, b_bits = bits[:, :n_A], bits[:, n_A:]
    mismatch = np.sum(a_bits[:, :k] != b_bits[:, :k], axis=1)
    surplus = a_bits[:, k:] if n_A > n_B else b_bits[:, k:]
    return (mismatch + surplus.sum(axis=1)).astype(float)


def diagonal_indices(n_A: int, n_B: int) -> np.ndarray:
    """Basis indices of ``|i, 0...0>|i>`` (or ``|i>|i, 0...0>``) for each ``i``."""
    k = min(n_A, n_B)
    i = np.arange(2**k)
    a = i << (n_A - k)
    b = i << (n_B - k)
    return (a << n_B) | b


@dataclass
class SvdResult:
    params_A: np.ndarray
    params_B: np.ndarray
    singular_values: np.ndarray
    final_loss: float
    recon_fidelity: float
    n_A: int
    n_B: int
    depth_A: int
    depth_B: int
    # signed diagonal amplitudes d_i, indexed by i (not sorted)
    coefficients: np.ndarray
    history: list

    def unitaries(self) -> tuple:
        """Dense ``(U_A, U_B)`` realized by the learned parameters."""
        ua = ops_unitary(AnsatzCircuit(self.n_A, self.depth_A).ops(), self.params_A, self.n_A)
        ub = ops_unitary(AnsatzCircuit(self.n_B, self.depth_B).ops(), self.params_B, self.n_B)
        return ua, ub


def _depths(depth, n_A: int, n_B: int) -> tuple:
    if depth is None:
        return sufficient_depth(n_A, n_B)
    if isinstance(depth, (tuple, list)):
        return int(depth[0]), int(depth[1])
    return int(depth), int(depth)


def qsvd(state: StateVector, n_A: int, n_B: int, depth=None,
         config: OptimizerConfig | None = None, restarts: int = 1) -> SvdResult:
    """Variational Schmidt decomposition of ``state`` over the cut ``n_A | n_B``.

    ``depth`` is one layer count for both sides, a ``(depth_A, depth_B)`` pair,
    or ``None`` for :func:`sufficient_depth`.  With ``restarts > 1`` the
    lowest-loss run is kept, seeds counting up from ``config.seed``.
    """
    if n_A < 1 or n_B < 1:
        raise ValueError("both subsystems need at least one qubit")
    n = n_A + n_B
    if state.n_qubits != n:
        raise ValueError(f"state has {state.n_qubits} qubits, cut covers {n}")
    config = config or DEFAULT_SVD_CONFIG
    d_A, d_B = _depths(depth, n_A, n_B)
    ans_A, ans_B = AnsatzCircuit(n_A, d_A), AnsatzCircuit(n_B, d_B)
    ops = ans_A.ops(range(n_A), n) + ans_B.ops(range(n_A, n), n, offset=ans_A.n_params)
    n_params = ans_A.n_params + ans_B.n_params
    psi = state.amplitudes
    if np.all(psi.imag == 0):
        psi = psi.real
    loss = CircuitExpectationLoss(ops, n, n_params, _hamming_diagonal(n_A, n_B), input=psi)

    best = None
    for r in range(restarts):
        seed = None if config.seed is None else config.seed + r
        cfg = OptimizerConfig(config.max_iterations, config.learning_rate,
                              config.convergence_tol, seed)
        res = minimize(loss, cfg)
        if best is None or res.best_value < best.best_value:
            best = res

    params = best.params
    phi = run_ops(ops, params, psi, n)
    diag_idx = diagonal_indices(n_A, n_B)
    coeffs = phi[diag_idx]
    kept = np.zeros_like(phi)
    kept[diag_idx] = coeffs
    rebuilt = run_ops_inverse(ops, params, kept, n)
    overlap = np.vdot(rebuilt, psi)
    denom = np.vdot(rebuilt, rebuilt).real * np.vdot(psi, psi).real
    fidelity = float(abs(overlap) ** 2 / denom) if denom > 0 else 0.0
    sv = np.sort(np.abs(coeffs))[::-1]
    sv = sv / np.linalg.norm(sv)
    if best.best_value > QSVD_LOSS_THRESHOLD:
        logger.debug("qsvd %d|%d stopped at loss %.3e", n_A, n_B, best.best_value)
    return SvdResult(params[: ans_A.n_params].copy(), params[ans_A.n_params:].copy(),
                     sv, float(best.best_value), fidelity, n_A, n_B, d_A, d_B,
                     coeffs.astype(complex), best.history)


def _check_unitary(U: np.ndarray) -> None:
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError("reshape needs a square matrix")
    if np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > 1e-8:
        raise ValueError("reshape input is not unitary")


def _index_layout(n_U: int, n_index: int, index_first: bool) -> tuple:
    if index_first:
        return list(range(n_index)), list(range(n_index, n_index + n_U))
    return list(range(n_U, n_U + n_index)), list(range(n_U))


def _unentangler(n_index: int, reg: list, idx: list, n: int):
    """Gates (in order) mapping ``|0...0>`` to ``2**(-k/2) sum_i |i>|i, 0...0>``."""
    gates = [Gate("h", (q,)) for q in idx]
    gates += [Gate("cnot", (idx[j], reg[j])) for j in range(n_index)]
    return gates


def exact_reshape(U, n_index: int | None = None, index_first: bool = True) -> StateVector:
    """``2**(-k/2) sum_i |i> (x) U|i, 0...0>`` over ``k + n_U`` qubits.

    Hadamards on the index register, transversal CNOTs into the leading
    ``k`` qubits of the second register, then ``U`` on that register.  With
    ``index_first=False`` the index register is placed after ``U``'s.
    Reshaping the result as a ``2**k x 2**n_U`` matrix gives, in row ``i``,
    the column ``U|i, 0...0>`` (so ``U.T`` itself when ``k = n_U``), scaled by
    ``2**(-k/2)``.
    """
    U = np.asarray(U)
    _check_unitary(U)
    n_U = int(round(np.log2(U.shape[0])))
    n_index = n_U if n_index is None else n_index
    if not 0 <= n_index <= n_U:
        raise ValueError(f"index register of {n_index} qubits does not fit {n_U}")
    n = n_U + n_index
    idx, reg = _index_layout(n_U, n_index, index_first)
    state = StateVector.zeros(n)
    for g in _unentangler(n_index, reg, idx, n):
        state = apply_gate(state, g)
    amps = apply_matrix(state.amplitudes, U, reg, n)
    return StateVector(n, amps, normalized=True)


@dataclass
class ReshapeResult:
    params: np.ndarray
    fidelity: float
    final_loss: float
    state: StateVector
    depth: int

    def __iter__(self):
        yield self.params
        yield self.fidelity


def variational_reshape(U, depth: int | None = None, config: OptimizerConfig | None = None,
                        n_index: int | None = None, index_first: bool = True,
                        restarts: int = 1) -> ReshapeResult:
    """Learn ansatz parameters whose output approximates :func:`exact_reshape`.

    The loss ``sum_q (1 - <Z_q>)`` is measured after undoing ``U`` on the
    second register and running the CNOT/Hadamard unentangler in reverse.
    """
    U = np.asarray(U)
    _check_unitary(U)
    n_U = int(round(np.log2(U.shape[0])))
    n_index = n_U if n_index is None else n_index
    n = n_U + n_index
    depth = state_depth(n) if depth is None else depth
    config = config or DEFAULT_RESHAPE_CONFIG
    idx, reg = _index_layout(n_U, n_index, index_first)

    # W maps the target reshape state to |0...0>: U^dagger, then the unentangler reversed
    basis = np.eye(2**n, dtype=complex)
    w = apply_matrix(basis, U.conj().T, reg, n)
    for g in reversed(_unentangler(n_index, reg, idx, n)):
        w = np.stack([apply_gate(StateVector(n, row), g).amplitudes for row in w])
    W = w.T
    weights = np.array([2.0 * bin(x).count("1") for x in range(2**n)])
    observable = W.conj().T @ (weights[:, None] * W)
    observable = (observable + observable.conj().T) / 2
    if np.max(np.abs(observable.imag)) < 1e-12:
        observable = observable.real

    ansatz = AnsatzCircuit(n, depth)
    loss = CircuitExpectationLoss(ansatz.ops(), n, ansatz.n_params, observable)
    best = None
    for r in range(restarts):
        seed = None if config.seed is None else config.seed + r
        cfg = OptimizerConfig(config.max_iterations, config.learning_rate,
                              config.convergence_tol, seed)
        res = minimize(loss, cfg)
        if best is None or res.best_value < best.best_value:
            best = res
    out = StateVector(n, loss.state(best.params).astype(complex))
    target = exact_reshape(U, n_index, index_first)
    fid = float(abs(np.vdot(target.amplitudes, out.amplitudes)) ** 2)
    return ReshapeResult(best.params, fid, float(best.best_value), out, depth)


@dataclass
class CanonicalResidual:
    side: str
    residual: float

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")


def check_canonical(tensor, side: str, from_state: bool = False) -> CanonicalResidual:
    """Frobenius distance of a site tensor's gram matrix from the identity.

    ``tensor`` has shape ``(chi_l, d, chi_r)``.  Left-canonical sums over the
    left bond and physical index, right-canonical over the physical index and
    right bond.  With ``from_state`` the tensor is a unit-norm site state and
    is first scaled by ``sqrt(chi)`` of the free bond.
    """
    t = np.asarray(tensor)
    chi_l, d, chi_r = t.shape
    if side == "left":
        m = t.reshape(chi_l * d, chi_r)
        gram = m.T @ m.conj()
        chi = chi_r
    elif side == "right":
        m = t.reshape(chi_l, d * chi_r)
        gram = m @ m.conj().T
        chi = chi_l
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if from_state:
        gram = gram * chi
    return CanonicalResidual(side, float(np.linalg.norm(gram - np.eye(chi))))


def site_residual(site: QmpsSite, side: str) -> CanonicalResidual:
    return check_canonical(site.tensor(), side, from_state=True)


@dataclass
class CanonicalizeResult:
    site: QmpsSite
    leftover: np.ndarray
    residual: CanonicalResidual
    svd: SvdResult | None
    converged: bool
    reshape_fidelity: float = 1.0


def _trivial(site: QmpsSite, target: str) -> CanonicalizeResult:
    # a closed bond of dimension 1: any unit-norm tensor is already canonical
    new = QmpsSite(site.state, site.n_l, site.n_p, site.n_r, canonical=target)
    return CanonicalizeResult(new, np.ones((1, 1)), site_residual(new, target), None, True)


def canonicalize_site(site: QmpsSite, target: str, depth=None,
                      config: OptimizerConfig | None = None, reshape: str = "exact",
                      restarts: int = 1, reshape_depth: int | None = None,
                      reshape_config: OptimizerConfig | None = None) -> CanonicalizeResult:
    """Bring a site into left- or right-canonical form via qSVD and reshape.

    Left: cut ``(left-aux + physical) | right-aux`` and keep ``U_A^dagger``.
    Right: cut ``left-aux | (physical + right-aux)`` and keep the rows from
    ``U_B``.  ``reshape`` is ``"exact"`` (the Hadamard/CNOT circuit) or
    ``"variational"``.  The returned ``leftover`` is the singular-value
    weighted factor that would be merged into the neighbour.
    """
    if target not in ("left", "right"):
        raise ValueError(f"target must be 'left' or 'right', got {target!r}")
    if reshape not in ("exact", "variational"):
        raise ValueError(f"unknown reshape mode {reshape!r}")
    if target == "left":
        n_A, n_B = site.n_l + site.n_p, site.n_r
        if n_B == 0:
            return _trivial(site, target)
        if n_A < n_B:
            raise ValueError("left-canonical form needs n_l + n_p >= n_r")
    else:
        n_A, n_B = site.n_l, site.n_p + site.n_r
        if n_A == 0:
            return _trivial(site, target)
        if n_B < n_A:
            raise ValueError("right-canonical form needs n_p + n_r >= n_l")

    svd = qsvd(site.state, n_A, n_B, depth=depth, config=config, restarts=restarts)
    ua, ub = svd.unitaries()
    d = svd.coefficients
    k = min(n_A, n_B)
    if target == "left":
        kept, n_index, index_first = ua.conj().T, n_B, False
        # psi = W diag(d) conj(U_B)[:k] with W the first-k columns of U_A^dagger
        leftover = d[:, None] * ub.conj()[: 2**k, :]
    else:
        kept, n_index, index_first = ub.conj().T, n_A, True
        leftover = ua.conj().T[:, : 2**k] * d[None, :]

    fidelity = 1.0
    if reshape == "exact":
        new_state = exact_reshape(kept, n_index, index_first)
    else:
        res = variational_reshape(kept, depth=reshape_depth, config=reshape_config,
                                  n_index=n_index, index_first=index_first, restarts=restarts)
        new_state = res.state
        fidelity = res.fidelity
    chi = 2**n_index
    new = QmpsSite(new_state, site.n_l, site.n_p, site.n_r, canonical=target,
                   log_scale=0.5 * np.log(chi))
    converged = svd.final_loss <= QSVD_LOSS_THRESHOLD
    if not converged:
        logger.warning("qsvd for %s-canonical site reached loss %.3e only",
                       target, svd.final_loss)
    return CanonicalizeResult(new, leftover, site_residual(new, target), svd, converged,
                              fidelity)


def exact_canonicalize_site(site: QmpsSite, target: str) -> CanonicalizeResult:
    """Classical-SVD counterpart of :func:`canonicalize_site` (exact-solver mode)."""
    t = site.tensor()
    chi_l, d, chi_r = t.shape
    if target == "left":
        if chi_r == 1:
            return _trivial(site, target)
        u, s, vh = np.linalg.svd(t.reshape(chi_l * d, chi_r), full_matrices=False)
        if u.shape[1] < chi_r:
            raise ValueError("left-canonical form needs n_l + n_p >= n_r")
        new_t = u.reshape(chi_l, d, chi_r)
        leftover = s[:, None] * vh
        chi = chi_r
    else:
        if chi_l == 1:
            return _trivial(site, target)
        u, s, vh = np.linalg.svd(t.reshape(chi_l, d * chi_r), full_matrices=False)
        if vh.shape[0] < chi_l:
            raise ValueError("right-canonical form needs n_p + n_r >= n_l")
        new_t = vh.reshape(chi_l, d, chi_r)
        leftover = u * s[None, :]
        chi = chi_l
    new = QmpsSite(StateVector(site.n_qubits, new_t.reshape(-1) / np.sqrt(chi)),
                   site.n_l, site.n_p, site.n_r, canonical=target,
                   log_scale=0.5 * np.log(chi))
    return CanonicalizeResult(new, leftover, site_residual(new, target), None, True)
