"""Compiled inner loops for RY/CNOT-permutation circuits on a single state vector."""

from __future__ import annotations

import numpy as np
from numba import njit

RY, PERM = 0, 1


@njit(cache=True)
def _ry(v, q, n, c, s):
    stride = 1 << (n - 1 - q)
    dim = v.shape[0]
    for base in range(0, dim, 2 * stride):
        for i in range(base, base + stride):
            a = v[i]
            b = v[i + stride]
            v[i] = c * a - s * b
            v[i + stride] = s * a + c * b


@njit(cache=True)
def _permute(v, perm, buf):
    for i in range(v.shape[0]):
        buf[i] = v[perm[i]]
    for i in range(v.shape[0]):
        v[i] = buf[i]


@njit(cache=True)
def forward(psi, kinds, qubits, pidx, perms, params, n):
    v = psi.copy()
    buf = np.empty_like(v)
    for g in range(kinds.shape[0]):
        if kinds[g] == RY:
            th = params[pidx[g]] / 2
            _ry(v, qubits[g], n, np.cos(th), np.sin(th))
        else:
            _permute(v, perms[pidx[g]], buf)
    return v


@njit(cache=True)
def adjoint(phi, lam, kinds, qubits, pidx, inv_perms, params, n):
    """Gradient of ``<phi|M|phi>`` from the final state and ``lam = M phi``."""
    phi = phi.copy()
    lam = lam.copy()
    buf = np.empty_like(phi)
    buf2 = np.empty_like(lam)
    grad = np.zeros(params.shape[0])
    for g in range(kinds.shape[0] - 1, -1, -1):
        if kinds[g] == RY:
            q = qubits[g]
            stride = 1 << (n - 1 - q)
            acc = 0.0
            for base in range(0, phi.shape[0], 2 * stride):
                for i in range(base, base + stride):
                    j = i + stride
                    acc += (np.conj(lam[j]) * phi[i] - np.conj(lam[i]) * phi[j]).real
            grad[pidx[g]] += acc
            th = params[pidx[g]] / 2
            c, s = np.cos(th), np.sin(th)
            _ry(phi, q, n, c, -s)
            _ry(lam, q, n, c, -s)
        else:
            _permute(phi, inv_perms[pidx[g]], buf)
            _permute(lam, inv_perms[pidx[g]], buf2)
    return grad


class CompiledCircuit:
    """Array form of a compiled op list for the kernels above."""

    def __init__(self, ops, n: int):
        self.n = n
        kinds, qubits, pidx, perms, invs = [], [], [], [], []
        for op in ops:
            if op[0] == "ry":
                kinds.append(RY)
                qubits.append(op[1])
                pidx.append(op[2])
            else:
                kinds.append(PERM)
                qubits.append(-1)
                pidx.append(len(perms))
                perms.append(op[1])
                invs.append(op[2])
        self.kinds = np.array(kinds, dtype=np.int64)
        self.qubits = np.array(qubits, dtype=np.int64)
        self.pidx = np.array(pidx, dtype=np.int64)
        if perms:
            self.perms = np.array(perms, dtype=np.int64)
            self.inv_perms = np.array(invs, dtype=np.int64)
        else:
            self.perms = np.zeros((1, 2**n), dtype=np.int64)
            self.inv_perms = self.perms

    def forward(self, psi: np.ndarray, params: np.ndarray) -> np.ndarray:
        return forward(psi, self.kinds, self.qubits, self.pidx, self.perms, params, self.n)

    def adjoint(self, phi: np.ndarray, lam: np.ndarray, params: np.ndarray) -> np.ndarray:
        return adjoint(phi, lam, self.kinds, self.qubits, self.pidx, self.inv_perms,
                       params, self.n)
