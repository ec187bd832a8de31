"""Hardware-efficient RY/CNOT ansatz, gradients and gradient-descent VQE.

A layer is one RY rotation per qubit followed by a CNOT ladder; even layers
couple (0,1),(2,3),... and odd layers couple (1,2),(3,4),...  Circuits are
compiled into a flat op list so several ansatze can act on disjoint qubit
subsets of one register (as in the two-sided qSVD circuit).

Losses expose ``value_and_grad``; the analytic gradient is obtained by
adjoint differentiation (a backward sweep that un-applies each gate), which
returns the same numbers as the parameter-shift rule at a fraction of the
cost.  :func:`gradient` is the parameter-shift reference used when a loss
has no analytic gradient.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ._kernels import CompiledCircuit
from .simulator import StateVector, apply_1q, cnot_permutation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnsatzCircuit:
    n_qubits: int
    depth: int

    @property
    def n_params(self) -> int:
        return self.n_qubits * self.depth

    def ladder(self, layer: int) -> list:
        start = layer % 2
        return [(q, q + 1) for q in range(start, self.n_qubits - 1, 2)]

    def ops(self, qubits=None, n_total: int | None = None, offset: int = 0) -> list:
        """Compile to ``("ry", qubit, param_index)`` / ``("perm", perm, inverse)`` ops.

        ``qubits`` maps the ansatz's local qubits onto a register of
        ``n_total`` qubits; parameters are numbered from ``offset``.
        """
        qubits = list(range(self.n_qubits)) if qubits is None else list(qubits)
        if len(qubits) != self.n_qubits:
            raise ValueError("qubit map does not match ansatz width")
        n_total = self.n_qubits if n_total is None else n_total
        out = []
        k = offset
        for layer in range(self.depth):
            for q in qubits:
                out.append(("ry", q, k))
                k += 1
            pairs = tuple((qubits[a], qubits[b]) for a, b in self.ladder(layer))
            if pairs:
                perm = cnot_permutation(pairs, n_total)
                inv = np.argsort(perm)
                out.append(("perm", perm, inv))
        return out


def run_ops(ops: list, params: np.ndarray, arr: np.ndarray, n: int) -> np.ndarray:
    """Apply compiled ops to a batch of raw amplitude arrays."""
    for op in ops:
        if op[0] == "ry":
            c, s = np.cos(params[op[2]] / 2), np.sin(params[op[2]] / 2)
            arr = apply_1q(arr, np.array([[c, -s], [s, c]]), op[1], n)
        else:
            arr = arr[..., op[1]]
    return arr


def run_ops_inverse(ops: list, params: np.ndarray, arr: np.ndarray, n: int) -> np.ndarray:
    for op in reversed(ops):
        if op[0] == "ry":
            c, s = np.cos(params[op[2]] / 2), np.sin(params[op[2]] / 2)
            arr = apply_1q(arr, np.array([[c, s], [-s, c]]), op[1], n)
        else:
            arr = arr[..., op[2]]
    return arr


def ops_unitary(ops: list, params: np.ndarray, n: int) -> np.ndarray:
    """Dense unitary of a compiled circuit (columns are images of basis states)."""
    basis = np.eye(2**n)
    return run_ops(ops, params, basis, n).T


def prepare(ansatz: AnsatzCircuit, params, input: StateVector | None = None) -> StateVector:
    params = np.asarray(params, dtype=float)
    if params.size != ansatz.n_params:
        raise ValueError(f"expected {ansatz.n_params} parameters, got {params.size}")
    if input is None:
        input = StateVector.zeros(ansatz.n_qubits)
    if input.n_qubits != ansatz.n_qubits:
        raise ValueError(f"input has {input.n_qubits} qubits, ansatz {ansatz.n_qubits}")
    out = run_ops(ansatz.ops(), params, input.amplitudes, ansatz.n_qubits)
    return StateVector(ansatz.n_qubits, out.astype(complex), normalized=input.normalized)


class LossFunction:
    """A deterministic map from parameters to a real loss, with an evaluation counter.

    Subclasses override :meth:`evaluate`; those that can also supply an
    analytic gradient override :meth:`value_and_grad`.
    """

    analytic = False

    def __init__(self, n_params: int):
        self.n_params = n_params
        self.evaluations = 0

    def evaluate(self, params: np.ndarray) -> float:
        raise NotImplementedError

    def __call__(self, params) -> float:
        self.evaluations += 1
        return float(self.evaluate(np.asarray(params, dtype=float)))

    def value_and_grad(self, params):
        return self(params), gradient(self, params)


class CallableLoss(LossFunction):
    """Wraps a plain function of the parameter vector.

    Without ``grad`` the parameter-shift rule is used, which is only exact
    for losses generated by RY circuits.
    """

    def __init__(self, fn, n_params: int, grad=None):
        super().__init__(n_params)
        self.fn = fn
        self.grad = grad

    def evaluate(self, params):
        return self.fn(params)

    def value_and_grad(self, params):
        if self.grad is None:
            return super().value_and_grad(params)
        params = np.asarray(params, dtype=float)
        return self(params), np.asarray(self.grad(params), dtype=float)


class CircuitExpectationLoss(LossFunction):
    """``<phi(theta)|M|phi(theta)> / <phi|G|phi>`` for a compiled circuit.

    ``observable`` is a dense matrix or a 1-D diagonal.  ``metric`` (the
    optional ``G``) turns the loss into a generalized Rayleigh quotient.
    """

    analytic = True

    def __init__(self, ops, n_qubits, n_params, observable, input=None, metric=None,
                 constant: float = 0.0):
        super().__init__(n_params)
        self.ops = ops
        self.n_qubits = n_qubits
        self.circuit = CompiledCircuit(ops, n_qubits)
        self.observable = np.asarray(observable)
        self.metric = None if metric is None else np.asarray(metric)
        self.constant = constant
        if input is None:
            input = np.zeros(2**n_qubits)
            input[0] = 1.0
        dtype = np.result_type(np.asarray(input), self.observable,
                               float if metric is None else self.metric)
        self.input = np.ascontiguousarray(input, dtype=dtype)

    def _apply(self, mat, phi):
        if mat.ndim == 1:
            return mat * phi
        return mat @ phi

    def state(self, params) -> np.ndarray:
        return self.circuit.forward(self.input, np.asarray(params, dtype=float))

    def evaluate(self, params):
        return self.value_and_grad(params, need_grad=False)[0]

    def value_and_grad(self, params, need_grad: bool = True):
        params = np.asarray(params, dtype=float)
        phi = self.state(params)
        mphi = self._apply(self.observable, phi)
        num = float(np.real(np.vdot(phi, mphi)))
        if self.metric is None:
            value = num
            weighted = mphi
        else:
            gphi = self._apply(self.metric, phi)
            den = float(np.real(np.vdot(phi, gphi)))
            value = num / den
            # d(num/den) = (d num - value * d den) / den
            weighted = (mphi - value * gphi) / den
        if not need_grad:
            return value + self.constant, None
        self.evaluations += 1
        grad = self.circuit.adjoint(phi, weighted.astype(phi.dtype), params)
        return value + self.constant, grad


def gradient(loss: LossFunction, params) -> np.ndarray:
    """Parameter-shift gradient ``(L(theta_k + pi/2) - L(theta_k - pi/2)) / 2``.

    Exact whenever every parameter enters once through an RY rotation and the
    loss is linear in expectation values.
    """
    params = np.asarray(params, dtype=float)
    grad = np.empty(params.size)
    shift = np.zeros(params.size)
    for k in range(params.size):
        shift[k] = np.pi / 2
        grad[k] = (loss(params + shift) - loss(params - shift)) / 2
        shift[k] = 0.0
    return grad


@dataclass
class OptimizerConfig:
    max_iterations: int = 300
    learning_rate: float = 0.05
    convergence_tol: float = 1e-10
    seed: int | None = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class OptimizeResult:
    params: np.ndarray
    history: list
    best_value: float

    def __iter__(self):
        # allows ``params, history = minimize(...)``
        yield self.params
        yield self.history


def minimize(loss: LossFunction, config: OptimizerConfig, x0=None) -> OptimizeResult:
    """Plain gradient descent ``theta <- theta - eta * grad``; returns best-seen parameters.

    Initial parameters are uniform in ``[0, 2 pi)`` from ``config.seed`` unless
    ``x0`` is given.
    """
    rng = np.random.default_rng(config.seed)
    if x0 is None:
        theta = rng.uniform(0.0, 2 * np.pi, loss.n_params)
    else:
        theta = np.array(x0, dtype=float)
    history = []
    best_value, best_theta = np.inf, theta.copy()
    for _ in range(config.max_iterations):
        value, grad = loss.value_and_grad(theta)
        history.append(value)
        if value < best_value:
            best_value, best_theta = value, theta.copy()
        if len(history) > 1 and abs(history[-2] - value) < config.convergence_tol:
            break
        theta = theta - config.learning_rate * grad
    else:
        value = loss(theta)
        history.append(value)
        if value < best_value:
            best_value, best_theta = value, theta.copy()
    return OptimizeResult(best_theta, history, best_value)


def _as_matrix(observable, n_qubits: int) -> np.ndarray:
    from .hamiltonian import PauliSum, dense

    if isinstance(observable, PauliSum):
        mat = dense(observable)
    else:
        mat = np.asarray(observable)
    if mat.shape != (2**n_qubits, 2**n_qubits):
        raise ValueError(f"observable shape {mat.shape} does not match {n_qubits} qubits")
    if np.max(np.abs(mat - mat.conj().T), initial=0.0) > 1e-8:
        raise ValueError("observable is not Hermitian")
    return mat


@dataclass
class VqeResult:
    energy: float
    state: StateVector
    params: np.ndarray
    history: list

    def __iter__(self):
        yield self.energy
        yield self.state
        yield self.params


def vqe_ground(observable, n_qubits: int, depth: int | None = None,
               config: OptimizerConfig | None = None, x0=None, metric=None) -> VqeResult:
    """Minimize ``<psi(theta)|O|psi(theta)>`` over the ansatz started from ``|0...0>``.

    With ``metric`` the objective is ``<psi|O|psi> / <psi|metric|psi>``.
    ``depth`` defaults to ``n_qubits``.
    """
    config = config or OptimizerConfig()
    depth = n_qubits if depth is None else depth
    # the ansatz is real, and for real states <psi|O|psi> only sees Re(O)
    mat = _as_matrix(observable, n_qubits).real
    if metric is not None:
        metric = _as_matrix(metric, n_qubits).real
    ansatz = AnsatzCircuit(n_qubits, depth)
    loss = CircuitExpectationLoss(ansatz.ops(), n_qubits, ansatz.n_params, mat,
                                  metric=metric)
    result = minimize(loss, config, x0=x0)
    psi = loss.state(result.params)
    return VqeResult(result.best_value, StateVector(n_qubits, psi.astype(complex)),
                     result.params, result.history)
