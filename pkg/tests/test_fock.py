from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import unitary_group

from hamfield import fock
from hamfield.errors import DimensionError, ValidationError
from hamfield.lattice import SpatialLattice
from oracles import single_mode_weyl, vacuum_characteristic


def cvec(rng, d, scale=1.0):
    return scale * (rng.normal(size=d) + 1j * rng.normal(size=d))


class TestSpace:
    @pytest.mark.parametrize("d,n", [(1, 0), (1, 7), (3, 8), (4, 3)])
    def test_dimension(self, d, n):
        assert fock.FockSpace(d, n).dim == comb(d + n, n) == fock.fock_dimension(d, n)

    def test_graded_lex_order(self):
        space = fock.FockSpace(2, 2)
        assert space.basis == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]

    def test_state_normalization_flag(self, rng):
        space = fock.FockSpace(2, 3)
        assert space.random_state(rng).is_normalized
        assert not fock.FockState(space, 2 * space.vacuum().coefficients).is_normalized

    def test_wrong_mode_length(self):
        with pytest.raises(DimensionError):
            fock.annihilation_operator(fock.FockSpace(2, 2), [1.0])


class TestLadder:
    def test_vacuum_annihilated(self, rng):
        space = fock.FockSpace(3, 4)
        assert fock.annihilate(cvec(rng, 3), space.vacuum()).norm == 0.0

    def test_creation_on_vacuum(self, rng):
        space = fock.FockSpace(3, 4)
        eta = cvec(rng, 3)
        state = fock.create(eta, space.vacuum())
        assert np.allclose(state.sector(1), eta)

    def test_antilinear_annihilator(self, rng):
        space = fock.FockSpace(2, 3)
        eta = cvec(rng, 2)
        a = fock.annihilation_operator(space, eta)
        b = fock.annihilation_operator(space, 1j * eta)
        assert abs(b - (-1j) * a).max() <= 1e-15

    @given(st.integers(0, 2**32 - 1))
    def test_ccr(self, seed):
        r = np.random.default_rng(seed)
        space = fock.FockSpace(3, 8)
        res = fock.ccr_residuals(space, cvec(r, 3), cvec(r, 3))
        assert max(res.values()) <= 1e-10

    def test_field_identity(self, rng):
        assert fock.field_identity_residual(fock.FockSpace(3, 5), cvec(rng, 3)) <= 1e-10

    def test_basis_independence(self, rng):
        space = fock.FockSpace(3, 4)
        B = unitary_group.rvs(3, random_state=1)
        eta_std = cvec(rng, 3)
        eta_b = B.conj().T @ eta_std
        a1 = fock.annihilation_operator(space, eta_std)
        a2 = fock.annihilation_operator(space, eta_b, basis=B)
        assert abs(a1 - a2).max() <= 1e-10
        psi_std = fock.field_operator(space)
        psi_b = fock.field_operator(space, basis=B)
        assert max(abs(p - q).max() for p, q in zip(psi_std, psi_b)) <= 1e-10


class TestOneBody:
    def test_number_on_vacuum(self):
        space = fock.FockSpace(2, 3)
        assert fock.total_number(space) @ space.vacuum().coefficients @ np.ones(space.dim) == 0

    def test_identity_gives_total_number(self):
        space = fock.FockSpace(3, 4)
        assert abs(fock.total_T_operator(space, np.eye(3)) - fock.total_number(space)).max() == 0

    def test_single_mode_spectrum(self):
        space = fock.FockSpace(1, 6)
        T = fock.total_T_operator(space, [[2.0]])
        assert np.allclose(T.diagonal(), 2 * np.arange(7))

    def test_number_operator_of_mode(self, rng):
        space = fock.FockSpace(2, 4)
        e0 = np.array([1.0, 0.0])
        assert abs(fock.number_operator(space, e0) - space.mode_creator(0) @ space.mode_annihilator(0)).max() <= 1e-15

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            fock.total_T_operator(fock.FockSpace(2, 2), [[0, 1], [0, 0]])

    def test_density(self, rng):
        lat = SpatialLattice(3, [0.5, 1.0, 2.0])
        space = fock.FockSpace(3, 3)
        v = space.vacuum()
        for x in range(3):
            n_x = fock.density_operator(space, lat, x)
            assert v.expect(n_x) == 0
            one = space.basis_state(tuple(int(k == x) for k in range(3)))
            assert np.isclose(one.expect(n_x).real, 1 / lat.measure_weights[x])
        psi = space.random_state(rng)
        total = sum(lat.measure_weights[x] * fock.density_operator(space, lat, x) for x in range(3))
        assert np.isclose(psi.expect(total), psi.expect(fock.total_number(space)), atol=1e-12)

    def test_second_quantized_positive_generator(self, rng):
        space = fock.FockSpace(3, 5)
        a = cvec(rng, 3)[:, None] * cvec(rng, 3)[None, :]
        A = a @ a.conj().T + 0.1 * np.eye(3)
        dG = fock.second_quantize_generator(space, A).toarray()
        assert np.min(np.linalg.eigvalsh(dG)) >= -1e-10


class TestWeyl:
    def test_zero_is_identity(self):
        space = fock.FockSpace(2, 4)
        assert np.allclose(fock.weyl_operator(space, [0, 0]), np.eye(space.dim))

    def test_matches_pade_single_mode(self):
        space = fock.FockSpace(1, 20)
        z = 0.4 - 0.7j
        assert np.max(np.abs(fock.weyl_operator(space, [z]) - single_mode_weyl(20, z))) <= 1e-12

    def test_vacuum_characteristic_converges(self):
        errs = []
        for n in [5, 10, 20, 40]:
            val = fock.vacuum_characteristic(fock.FockSpace(1, n), [1.0])
            errs.append(abs(val - vacuum_characteristic(1.0)))
        assert errs[-1] <= 1e-6
        assert all(b <= a for a, b in zip(errs, errs[1:]))

    def test_weyl_relation(self):
        eta, eta2 = np.array([0.6 + 0.8j]), np.array([1.0 + 0.0j])
        assert fock.weyl_relation_residual(fock.FockSpace(1, 60), eta, eta2) <= 1e-6

    def test_weyl_relation_cutoff_monotone(self):
        eta, eta2 = np.array([0.6 + 0.8j]), np.array([-0.3j])
        res = [fock.weyl_relation_residual(fock.FockSpace(1, n), eta, eta2) for n in (8, 15, 30)]
        assert res[0] > res[1] > res[2]

    def test_phase_sign(self):
        # W(eta) W(i eta) picks up exp(-i Im<eta, i eta> / 2) = exp(-i/2) for |eta| = 1
        space = fock.FockSpace(1, 60)
        lhs = fock.weyl_operator(space, [1.0]) @ fock.weyl_operator(space, [1j])
        rhs = fock.weyl_operator(space, [1 + 1j])
        ratio = lhs[0, 0] / rhs[0, 0]
        assert np.isclose(ratio, np.exp(-0.5j), atol=1e-10)


class TestSecondQuantization:
    def test_identity(self):
        space = fock.FockSpace(2, 4)
        assert np.allclose(fock.second_quantize(space, np.eye(2)), np.eye(space.dim), atol=0)

    def test_non_unitary_rejected(self):
        with pytest.raises(ValidationError):
            fock.second_quantize(fock.FockSpace(2, 2), 2 * np.eye(2))

    def test_unitary_and_sector_preserving(self):
        space = fock.FockSpace(3, 4)
        U = unitary_group.rvs(3, random_state=7)
        g = fock.second_quantize(space, U)
        assert np.max(np.abs(g.conj().T @ g - np.eye(space.dim))) <= 1e-12
        off = g[np.not_equal.outer(space.totals, space.totals)]
        assert np.max(np.abs(off)) == 0

    def test_homomorphism(self):
        space = fock.FockSpace(2, 5)
        U, V = unitary_group.rvs(2, random_state=1), unitary_group.rvs(2, random_state=2)
        lhs = fock.second_quantize(space, U @ V)
        rhs = fock.second_quantize(space, U) @ fock.second_quantize(space, V)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_covariance(self):
        space = fock.FockSpace(1, 60)
        U = np.array([[np.exp(0.7j)]])
        assert fock.covariance_residual(space, U, np.array([0.8 - 0.6j])) <= 1e-6

    def test_covariance_two_modes(self):
        space = fock.FockSpace(2, 30)
        U = unitary_group.rvs(2, random_state=3)
        eta = np.array([0.5, 0.5j])
        assert fock.covariance_residual(space, U, eta, max_particles=3) <= 1e-6


class TestDynamics:
    def test_zero_hamiltonian(self, rng):
        space = fock.FockSpace(2, 4)
        psi = space.random_state(rng)
        out = fock.evolve_quantum(fock.fock_hamiltonian(space, np.zeros((2, 2))), psi, 3.0)
        assert np.allclose(out.coefficients, psi.coefficients)

    def test_single_mode_phases(self):
        space = fock.FockSpace(1, 6)
        psi = fock.FockState(space, np.ones(7) / np.sqrt(7))
        out = fock.evolve_quantum(fock.fock_hamiltonian(space, [[2.0]]), psi, 0.3)
        assert np.allclose(out.coefficients, np.exp(-2j * np.arange(7) * 0.3) / np.sqrt(7), atol=1e-14)

    @pytest.mark.parametrize("t", [0.1, 1.0])
    def test_equivalence_with_second_quantization(self, rng, t):
        space = fock.FockSpace(2, 8)
        a = cvec(rng, 2)[:, None] * np.conj(cvec(rng, 2))[None, :]
        H = a + a.conj().T + np.diag([1.0, 2.0])
        assert fock.dynamics_equivalence_residual(space, H, space.random_state(rng), t) <= 1e-8
