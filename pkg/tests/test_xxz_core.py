import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from xxzkink.errors import DomainError, ResourceError
from xxzkink.policy import DEFAULT_POLICY
from xxzkink.xxz_core import (
    ChainSpec,
    build_hamiltonian,
    hamiltonian_projector_form,
    hamiltonian_spin_form,
    kink_ground_family,
    kink_state,
    lowering_operator,
    popcount,
    q_from_delta,
    spectral_decomposition,
    spin_operator,
    total_sz,
)


def test_q_from_delta_values():
    assert q_from_delta(2.0) == pytest.approx(2 - math.sqrt(3), abs=1e-15)
    assert q_from_delta(1 + 1e-10) > 0.999
    assert q_from_delta(1e8) < 1e-7


@pytest.mark.parametrize("delta", [1.0, 0.5, -3.0, float("nan")])
def test_q_from_delta_rejects(delta):
    with pytest.raises(DomainError):
        q_from_delta(delta)


@given(st.floats(1.0001, 1e6))
def test_q_quadratic_root(delta):
    q = q_from_delta(delta)
    assert 0 < q < 1
    assert abs(q + 1 / q - 2 * delta) <= 1e-12 * max(1.0, 2 * delta)


def test_chainspec_validation():
    with pytest.raises(DomainError):
        ChainSpec(3, 3, 2.0)
    with pytest.raises(DomainError):
        ChainSpec(1, 4, 2.0, q=0.5)
    c = ChainSpec(-2, 5, 2.0)
    assert c.L == 8 and c.dim == 256
    assert list(c.sites) == list(range(-2, 6))


def test_two_site_spectrum():
    H = build_hamiltonian(ChainSpec(1, 2, 2.0)).toarray()
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [0, 0, 0, 1], atol=1e-14)


@pytest.mark.parametrize("L,delta", [(3, 1.5), (5, 2.0), (7, 4.0)])
def test_two_constructions_agree(L, delta):
    c = ChainSpec(0, L - 1, delta)
    diff = hamiltonian_spin_form(c) - hamiltonian_projector_form(c)
    assert abs(diff).max() <= 1e-12


def test_hamiltonian_commutes_with_total_sz():
    c = ChainSpec(1, 7, 2.0)
    H, Sz = build_hamiltonian(c), total_sz(c)
    assert abs(H @ Sz - Sz @ H).max() <= 1e-12


def test_sector_block_diagonal():
    c = ChainSpec(1, 6, 1.5)
    H = build_hamiltonian(c).tocoo()
    assert np.all(popcount(H.row) == popcount(H.col))


@pytest.mark.parametrize("L", [2, 5, 8])
def test_lowering_operator_properties(L):
    c = ChainSpec(1, L, 2.0)
    H, Sm = build_hamiltonian(c), lowering_operator(c)
    assert abs(H @ Sm - Sm @ H).max() <= 1e-12
    v = kink_state(c, L / 2)
    for k in range(1, L + 1):
        v = Sm @ v
        w = v / np.linalg.norm(v)
        np.testing.assert_allclose(w, kink_state(c, L / 2 - k), atol=1e-10)
    assert np.linalg.norm(Sm @ v) == 0.0


def test_extreme_kinks_are_product_states():
    c = ChainSpec(1, 5, 2.0)
    up, down = kink_state(c, 2.5), kink_state(c, -2.5)
    assert up[0] == 1.0 and down[-1] == 1.0
    for x in c.sites:
        sz = spin_operator(c, "z", int(x))
        assert up @ sz @ up == pytest.approx(0.5)
        assert down @ sz @ down == pytest.approx(-0.5)


def test_kink_state_rejects_bad_sector():
    c = ChainSpec(1, 4, 2.0)
    for m in (0.5, 3, 2.2):
        with pytest.raises(DomainError):
            kink_state(c, m)


def test_kink_profile_decreases():
    c = ChainSpec(1, 10, 2.0)
    psi = kink_state(c, 0)
    prof = [psi @ spin_operator(c, "z", int(x)) @ psi for x in c.sites]
    assert np.all(np.diff(prof) < 0)


@pytest.mark.parametrize("L,delta", [(2, 1.5), (6, 2.0), (9, 4.0)])
def test_ground_family_invariants(L, delta):
    c = ChainSpec(1, L, delta)
    H = build_hamiltonian(c)
    fam = kink_ground_family(c)
    assert len(fam) == L + 1
    assert fam.residuals(H).max() <= 1e-10
    assert fam.orthonormality_defect() <= 1e-10
    assert fam.idempotency_defect() <= 1e-10
    P = fam.projector
    assert abs(P - P.T).max() == 0
    assert abs(P @ P - P).max() <= 1e-10
    assert P.diagonal().sum() == pytest.approx(L + 1)
    assert all(np.all(a >= 0) for a in fam.amplitudes)


def test_lowering_matrix_elements_real():
    c = ChainSpec(1, 6, 2.0)
    Sm = lowering_operator(c)
    fam = kink_ground_family(c)
    st_ = [v.astype(complex) for v in fam.states]
    for lo, hi in zip(st_[:-1], st_[1:]):
        assert abs(np.vdot(lo, Sm @ hi).imag) <= 1e-12
    Sminus = sum(spin_operator(c, "-", int(x)) for x in c.sites)
    vals = [np.vdot(lo, Sminus @ hi) for lo, hi in zip(st_[:-1], st_[1:])]
    assert all(abs(v.imag) <= 1e-12 and v.real > 0 for v in vals)


def test_zero_operator_decomposition():
    sd = spectral_decomposition(sp.csr_matrix((16, 16)))
    assert len(sd.clusters) == 1 and sd.clusters[0].energy == 0
    np.testing.assert_allclose(sd.projector(0), np.eye(16), atol=1e-14)


def test_l8_kernel_multiplicity_and_reconstruction():
    H = build_hamiltonian(ChainSpec(1, 8, 2.0))
    sd = spectral_decomposition(H)
    assert sd.clusters[0].multiplicity == 9
    assert abs(sd.clusters[0].energy) < 1e-10
    assert np.abs(sd.reconstruct() - H.toarray()).max() <= 1e-9
    total = sum(sd.projector(k) for k in range(len(sd.clusters)))
    assert np.abs(total - np.eye(256)).max() <= 1e-9


def test_sectorized_matches_dense():
    H = build_hamiltonian(ChainSpec(1, 7, 1.5))
    a = spectral_decomposition(H).eigenvalues
    b = spectral_decomposition(H, sectorized=False).eigenvalues
    np.testing.assert_allclose(a, b, atol=1e-11)


def test_gap_decreases_toward_limit():
    gaps = [spectral_decomposition(build_hamiltonian(ChainSpec(1, L, 2.0))).gap() for L in (4, 6, 8)]
    assert all(g > 0.5 for g in gaps)
    assert gaps[0] > gaps[1] > gaps[2]


def test_resource_caps():
    policy = DEFAULT_POLICY.with_(max_sites=6)
    H = build_hamiltonian(ChainSpec(1, 7, 2.0))
    with pytest.raises(ResourceError):
        spectral_decomposition(H, policy=policy)
    with pytest.raises(ResourceError):
        spectral_decomposition(H, sectorized=False, policy=DEFAULT_POLICY.with_(dense_dim_cap=64))


def test_sector_mixing_operator_rejected():
    c = ChainSpec(1, 4, 2.0)
    X = spin_operator(c, "x", 2)
    with pytest.raises(DomainError):
        spectral_decomposition(X)
    sd = spectral_decomposition(X, sectorized=False)
    np.testing.assert_allclose(sorted(set(np.round(sd.eigenvalues, 12))), [-0.5, 0.5])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.sampled_from([1.5, 2.0, 4.0]))
def test_hamiltonian_positive_with_exact_kernel(L, delta):
    H = build_hamiltonian(ChainSpec(1, L, delta))
    E = spectral_decomposition(H, vectors=False).eigenvalues
    assert E.min() >= -1e-12
    assert int(np.sum(E < 1e-10)) == L + 1
