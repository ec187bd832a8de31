from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqmps.hamiltonian import PauliSum, build_xxz, dense, mpo_to_dense, to_mpo
from vqmps.oracle import kron_matrix
from vqmps.simulator import PauliString


@st.composite
def pauli_sums(draw, max_qubits=5):
    n = draw(st.integers(1, max_qubits))
    labels = st.text(alphabet="IXYZ", min_size=n, max_size=n)
    terms = draw(st.lists(st.tuples(st.floats(-2, 2), labels), min_size=1, max_size=6))
    return PauliSum(n, [PauliString(c, ops) for c, ops in terms])


@pytest.mark.parametrize("N,h,count", [(2, 0.0, 3), (3, 0.0, 6), (5, 0.3, 17), (8, 1.0, 29)])
def test_xxz_term_count(N, h, count):
    assert len(build_xxz(N, 1.0, 0.7, h)) == count


def test_xxz_rejects_single_site():
    with pytest.raises(ValueError):
        build_xxz(1)


def test_xxz_two_site_terms():
    ops = sorted(t.ops for t in build_xxz(2))
    assert ops == ["XX", "YY", "ZZ"]


def test_field_only_chain():
    h = build_xxz(2, J=0.0, delta=0.0, h=1.0)
    w, v = np.linalg.eigh(dense(h))
    assert w[0] == pytest.approx(-2.0)
    assert abs(v[0b11, 0]) == pytest.approx(1.0)


@pytest.mark.parametrize("delta", [0.5, 1.0, 1.5])
def test_two_site_ground_energy(delta):
    # the singlet-like state (|01> - |10>) has energy -2J - delta
    assert np.linalg.eigvalsh(dense(build_xxz(2, 1.0, delta)))[0] == pytest.approx(-2 - delta)


@settings(max_examples=50, deadline=None)
@given(h=pauli_sums())
def test_dense_matches_kronecker_oracle(h):
    np.testing.assert_allclose(dense(h), kron_matrix(h), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(h=pauli_sums(max_qubits=4))
def test_mpo_is_faithful(h):
    if not len(h):
        return
    np.testing.assert_allclose(mpo_to_dense(to_mpo(h)), kron_matrix(h), atol=1e-12)


@pytest.mark.parametrize("N", [2, 4, 6])
def test_xxz_mpo_is_faithful(N):
    h = build_xxz(N, 0.8, 1.3, 0.4)
    np.testing.assert_allclose(mpo_to_dense(to_mpo(h)), dense(h), atol=1e-12)


def test_identical_patterns_merge():
    h = PauliSum(2, [PauliString(1.0, "XZ"), PauliString(0.5, "XZ"), PauliString(1.0, "ZZ"),
                     PauliString(-1.0, "ZZ")])
    assert [(t.ops, t.coefficient) for t in h] == [("XZ", 1.5)]
    kept = PauliSum(2, [PauliString(0.0, "ZZ")], keep_zeros=True)
    assert len(kept) == 1


def test_mpo_layout():
    mpo = to_mpo(build_xxz(3, 1.0, 2.0))
    assert mpo.bond_size == 6
    assert mpo.site_ops[0][:3] == ("X", "Y", "Z")
    mats = mpo.site_matrices(2, with_coefficients=True)
    # term 2 is Z Z I with weight 2, which sits on the last site
    np.testing.assert_allclose(mats[2], 2.0 * np.eye(2))
    np.testing.assert_allclose(mats[5], 2.0 * np.diag([1, -1]))


def test_mismatched_term_rejected():
    with pytest.raises(ValueError):
        PauliSum(3, [PauliString(1.0, "XX")])
