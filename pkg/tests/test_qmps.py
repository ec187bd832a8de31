from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vqmps.hamiltonian import build_xxz, to_mpo
from vqmps.oracle import ClassicalMps, kron_matrix
from vqmps.qmps import (
    LocalTensor,
    QmpsChain,
    QmpsSite,
    assemble_global,
    bond_widths,
    chain_local_tensors,
    contract_expectation,
    contract_sites,
    identity_tensors,
    local_tensor,
    project_aux,
    random_chain,
    random_site,
)
from vqmps.simulator import StateVector


@pytest.mark.parametrize("N,n_chi,widths", [
    (2, 1, [1]), (4, 1, [1, 1, 1]), (6, 2, [1, 2, 2, 2, 1]), (8, 3, [1, 2, 3, 3, 3, 2, 1]),
])
def test_bond_widths_taper(N, n_chi, widths):
    assert bond_widths(N, n_chi) == widths


def test_random_chain_is_deterministic():
    a, b = random_chain(5, 2, seed=4), random_chain(5, 2, seed=4)
    for x, y in zip(a.sites, b.sites):
        np.testing.assert_array_equal(x.state.amplitudes, y.state.amplitudes)
    assert a.global_n == 5
    assert [s.n_qubits for s in a.sites] == [2, 4, 5, 4, 2]


def test_site_validation():
    with pytest.raises(ValueError):
        QmpsSite(StateVector.zeros(3), 1, 1, 2)
    with pytest.raises(ValueError):
        QmpsSite(StateVector(2, np.ones(4)), 1, 1, 0)
    with pytest.raises(ValueError):
        QmpsSite(StateVector.zeros(2), 1, 1, 0, canonical="middle")


def test_chain_validation():
    s = random_site(0, 1, 1, seed=0)
    with pytest.raises(ValueError):
        QmpsChain((s,))
    with pytest.raises(ValueError):
        QmpsChain((s, random_site(2, 1, 0, seed=1)))


def test_from_tensor_records_scale():
    t = np.arange(8.0).reshape(2, 2, 2)
    site = QmpsSite.from_tensor(t, 1, 1, 1)
    assert site.log_scale == pytest.approx(np.log(np.linalg.norm(t)))
    np.testing.assert_allclose(site.tensor() * np.exp(site.log_scale), t)


def test_project_aux_completeness():
    site = random_site(2, 1, 1, seed=3)
    total = sum(project_aux(site, j, k).norm_squared() for j in range(4) for k in range(2))
    assert total == pytest.approx(1.0)
    np.testing.assert_allclose(project_aux(site, [1, 0], [1]).amplitudes,
                               site.tensor()[2, :, 1])


@settings(max_examples=20, deadline=None)
@given(N=st.integers(2, 7), n_chi=st.integers(1, 2), seed=st.integers(0, 2**31))
def test_assembled_state_matches_classical_contraction(N, n_chi, seed):
    chain = random_chain(N, n_chi, seed=seed)
    state, norm = assemble_global(chain)
    ref = ClassicalMps.from_chain(chain).to_dense()
    np.testing.assert_allclose(state.amplitudes, ref, atol=1e-12)
    assert norm == pytest.approx(np.linalg.norm(ref))


def test_contract_sites_preserves_global_state():
    chain = random_chain(4, 1, seed=9)
    merged = contract_sites(chain.sites[1], chain.sites[2])
    short = QmpsChain((chain.sites[0], merged, chain.sites[3]), 1)
    a, _ = assemble_global(chain)
    b, _ = assemble_global(short)
    np.testing.assert_allclose(b.amplitudes * np.exp(merged.log_scale), a.amplitudes,
                               atol=1e-12)
    with pytest.raises(ValueError):
        contract_sites(chain.sites[0], chain.sites[2].__class__(
            StateVector.zeros(3), 2, 1, 0))


def test_local_tensor_entries():
    site = random_site(1, 1, 1, seed=2)
    v = local_tensor(site, ("Z", "X", "Z"))
    psi = site.tensor()
    z = np.diag([1, -1])
    for g, G, d, D in np.ndindex(2, 2, 2, 2):
        ref = np.vdot(psi[G, :, D], z @ psi[g, :, d])
        assert v.data[g, 0, G, d, D] == pytest.approx(ref)
    np.testing.assert_array_equal(v.data[:, 0], v.data[:, 2])
    full = v.dense()
    assert full.shape == (2, 3, 2, 2, 3, 2)
    assert not np.any(full[:, 0, :, :, 1, :])
    assert v.rank == 6


def test_end_site_tensor_is_rank_three():
    v = local_tensor(random_site(0, 1, 2, seed=0), ("Y",))
    assert v.rank == 3
    with pytest.raises(ValueError):
        local_tensor(QmpsSite(StateVector.zeros(2), 0, 2, 0), ("Z",))


@pytest.mark.parametrize("N,n_chi", [(2, 1), (4, 1), (5, 2), (7, 3)])
def test_expectation_matches_dense(N, n_chi):
    chain = random_chain(N, n_chi, seed=N)
    h = build_xxz(N, 0.9, 1.2, 0.3)
    mpo = to_mpo(h)
    num = contract_expectation(chain_local_tensors(chain, mpo), mpo.coefficients)
    den = contract_expectation(identity_tensors(chain), [1.0])
    psi = ClassicalMps.from_chain(chain).to_dense()
    ref = np.vdot(psi, kron_matrix(h) @ psi).real / np.vdot(psi, psi).real
    assert num / den == pytest.approx(ref, rel=1e-10)


def test_contraction_direction_independent():
    chain = random_chain(6, 2, seed=1)
    mpo = to_mpo(build_xxz(6, 1.0, 0.5))
    tensors = chain_local_tensors(chain, mpo)
    left = contract_expectation(tensors, mpo.coefficients, "left", keep_imag=True)
    right = contract_expectation(tensors, mpo.coefficients, "right", keep_imag=True)
    assert left == pytest.approx(right, rel=1e-12)
    assert abs(left.imag) < 1e-12


def test_contraction_dimension_errors():
    chain = random_chain(3, 1, seed=0)
    tensors = identity_tensors(chain)
    with pytest.raises(ValueError):
        contract_expectation(tensors, [1.0, 2.0])
    bad = [tensors[0], LocalTensor(np.zeros((4, 1, 4, 1, 1))), tensors[2]]
    with pytest.raises(ValueError):
        contract_expectation(bad, [1.0])
