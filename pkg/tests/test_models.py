import itertools

import numpy as np
import pytest

from osmps.basis import make_basis
from osmps.models import (
    SM,
    SP,
    SZ,
    MajoranaPair,
    ModelError,
    SiamChain,
    SpinCurrent,
    XxzModel,
    hamiltonian_state,
    majorana_states,
    siam_terms,
    spin_current_state,
    total_current_state,
    xxz_terms,
)
from osmps.mps import identity_state, inner
from osmps.oracle import basis_vectorizer, dense_hamiltonian, dense_product

HERM2 = make_basis(2, "hermitian")


def state_to_dense(state):
    vec = np.ones((1,))
    for t in state.tensors:
        vec = np.tensordot(vec, t, axes=(-1, 0)).reshape(-1, t.shape[2])
    coeffs = vec[:, 0] * np.exp(state.log_scale)
    dim = state.basis.d**state.n
    return (basis_vectorizer(state.basis, state.n) @ coeffs).reshape(dim, dim)


class TestXxz:
    def test_free_point_spectrum(self):
        h = dense_hamiltonian(xxz_terms(XxzModel(n=2, delta=0.0)))
        assert np.allclose(sorted(np.linalg.eigvalsh(h)), [-2, 0, 0, 2], atol=1e-12)

    def test_isotropic_ground_energy(self):
        h = dense_hamiltonian(xxz_terms(XxzModel(n=2, delta=1.0)))
        vals = np.linalg.eigvalsh(h)
        assert abs(vals.min() + 3.0) < 1e-12
        assert np.allclose(sorted(vals), [-3, 1, 1, 1], atol=1e-12)

    def test_delta_only_shifts_zz_block(self):
        up_up = np.kron([1, 0], [1, 0]).astype(float)
        h = dense_hamiltonian(xxz_terms(XxzModel(n=2, delta=2.0)))
        assert abs(up_up @ h @ up_up - 2.0) < 1e-14

    def test_terms_are_real(self):
        terms = xxz_terms(XxzModel(n=3, delta=0.5))
        assert all(not np.iscomplexobj(op) for _, op in terms.two_site)

    def test_too_short_chain(self):
        with pytest.raises(ModelError):
            XxzModel(n=1, delta=1.0)


class TestSiam:
    def test_free_chains_spectrum(self):
        # U=0, eps_f=0: two decoupled 2-site tight-binding chains
        model = SiamChain.uniform(4, 0.5, u=0.0, eps_f=0.0)
        h = dense_hamiltonian(siam_terms(model))
        single = np.array([-0.5, 0.5])  # eigenvalues of [[0, tau], [tau, 0]]
        many = []
        for occ_l in itertools.product([0, 1], repeat=2):
            for occ_r in itertools.product([0, 1], repeat=2):
                many.append(np.dot(occ_l, single) + np.dot(occ_r, single))
        assert np.allclose(sorted(np.linalg.eigvalsh(h)), sorted(many), atol=1e-12)

    def test_particle_hole_symmetric_spectrum(self):
        model = SiamChain.uniform(4, 0.5, u=1.0, eps_f=-0.5)
        vals = np.linalg.eigvalsh(dense_hamiltonian(siam_terms(model)))
        # spectrum symmetric around its midpoint at the particle-hole point
        shifted = vals - np.mean(vals)
        assert np.allclose(sorted(shifted), sorted(-shifted), atol=1e-10)

    def test_reference_configuration_loads(self):
        model = SiamChain.uniform(8, 0.5, u=1.0, eps_f=-0.5)
        terms = siam_terms(model)
        h = dense_hamiltonian(terms)
        assert np.abs(h - h.conj().T).max() < 1e-12

    def test_junction_carries_only_u(self):
        # with U=0 the two halves decouple: H = H_L (x) 1 + 1 (x) H_R
        model = SiamChain.uniform(4, 0.5, u=0.0, eps_f=0.3)
        h = dense_hamiltonian(siam_terms(model))
        m = h.reshape(4, 4, 4, 4)
        a = np.einsum("ijkj->ik", m) / 4  # H_L + const
        b = np.einsum("ijil->jl", m) / 4  # H_R + const
        c = np.trace(h) / 16
        rebuilt = np.kron(a, np.eye(4)) + np.kron(np.eye(4), b) - c * np.eye(16)
        assert np.abs(h - rebuilt).max() < 1e-12

    def test_junction_hopping_must_vanish(self):
        with pytest.raises(ModelError):
            SiamChain(n=4, taus=[0.5, 0.5, 0.5], u=1.0, eps_f=0.0)

    def test_hybridization_symmetry_enforced(self):
        with pytest.raises(ModelError):
            SiamChain(n=6, taus=[0.5, 0.4, 0.0, 0.5, 0.5], u=1.0, eps_f=0.0)

    def test_odd_n_rejected(self):
        with pytest.raises(ModelError):
            SiamChain.uniform(5, 0.5, u=1.0, eps_f=0.0)


class TestSpinCurrent:
    def test_traceless(self):
        j = spin_current_state(0, 2, HERM2)
        assert abs(inner(identity_state(2, HERM2), j)) < 1e-13

    def test_norm_half(self):
        j = spin_current_state(0, 2, HERM2)
        assert abs(inner(j, j) - 0.5) < 1e-13

    def test_real_coefficients_in_hermitian_basis(self):
        j = spin_current_state(1, 4, HERM2)
        assert j.is_real

    def test_matches_defining_formula_densely(self):
        n, m = 4, 1
        j = spin_current_state(m, n, HERM2)
        expected = 1j * (dense_product([(m, SP), (m + 1, SM)], n)
                         - dense_product([(m, SM), (m + 1, SP)], n))
        assert np.abs(state_to_dense(j) - expected).max() < 1e-12

    def test_total_current_matches_sum(self):
        n = 4
        tot = total_current_state(n, HERM2)
        expected = sum(1j * (dense_product([(m, SP), (m + 1, SM)], n)
                             - dense_product([(m, SM), (m + 1, SP)], n))
                       for m in range(n - 1))
        assert np.abs(state_to_dense(tot) - expected).max() < 1e-11
        assert tot.is_real

    def test_bond_range(self):
        with pytest.raises(ModelError):
            spin_current_state(3, 4, HERM2)


class TestMajorana:
    def test_normalized_and_orthogonal(self):
        w, wp = majorana_states(MajoranaPair(site=2), 4, HERM2)
        assert abs(inner(w, w) - 1) < 1e-13
        assert abs(inner(wp, wp) - 1) < 1e-13
        assert abs(inner(w, wp)) < 1e-13

    def test_squares_to_identity_densely(self):
        w, wp = majorana_states(MajoranaPair(site=2), 4, HERM2)
        wd = state_to_dense(w)
        wpd = state_to_dense(wp)
        assert np.allclose(wd @ wd, np.eye(16), atol=1e-12)
        assert np.allclose(wpd @ wpd, np.eye(16), atol=1e-12)

    def test_hermitian_and_real(self):
        w, wp = majorana_states(MajoranaPair(site=1), 4, HERM2)
        assert w.is_real and wp.is_real
        wd = state_to_dense(w)
        assert np.abs(wd - wd.conj().T).max() < 1e-12

    def test_reconstructs_annihilator(self):
        # f = (w - i w')/2 must equal string * sigma^+
        n, site = 4, 2
        w, wp = majorana_states(MajoranaPair(site=site), n, HERM2)
        f = (state_to_dense(w) - 1j * state_to_dense(wp)) / 2
        expected = dense_product([(0, SZ), (1, SZ), (site, SP)], n)
        assert np.abs(f - expected).max() < 1e-12


class TestHamiltonianState:
    def test_matches_dense_hamiltonian(self):
        terms = xxz_terms(XxzModel(n=4, delta=0.7))
        hs = hamiltonian_state(terms, HERM2)
        assert np.abs(state_to_dense(hs) - dense_hamiltonian(terms)).max() < 1e-11
        assert hs.is_real

    def test_siam_with_one_site_terms(self):
        model = SiamChain.uniform(4, 0.5, u=1.0, eps_f=-0.5)
        terms = siam_terms(model)
        hs = hamiltonian_state(terms, HERM2)
        assert np.abs(state_to_dense(hs) - dense_hamiltonian(terms)).max() < 1e-11
