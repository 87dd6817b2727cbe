import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamfield.errors import DimensionError, GuardError, SingularTrajectoryError, ValidationError
from hamfield.lattice import SpatialLattice
from hamfield.linear_dynamics import build_generator, evolve_linear
from hamfield.nonlinear_classical import (
    FieldHamiltonian,
    energy,
    flow_symplecticity,
    nonlinear_evolve,
    reference_phi4_config,
    total_momentum,
)
from hamfield.symplectic import PhaseVector, poisson_bracket

from oracles import fd_derivative


def small(sites=4, mass=1.0, coupling=0.1, spacing=1.0, seed=3, scale=0.5):
    lat = SpatialLattice.uniform(sites, spacing)
    rng = np.random.default_rng(seed)
    return FieldHamiltonian(lat, mass, coupling, spacing), PhaseVector.random(lat, rng, scale)


class TestEnergy:
    def test_zero_state(self):
        H, _ = small()
        assert energy(H, PhaseVector.zero(H.lattice)) == 0.0

    def test_single_site_kinetic(self):
        lat = SpatialLattice(1)
        H = FieldHamiltonian(lat, 0.0, 0.0)
        assert energy(H, PhaseVector.from_arrays(lat, [0.0], [2.0])) == 2.0

    def test_quartic_homogeneity(self):
        H, eta = small()
        doubled = PhaseVector.from_arrays(H.lattice, 2 * eta.phi.values, eta.pi.values)
        assert np.isclose(H.energy_terms(doubled)["interaction"], 16 * H.energy_terms(eta)["interaction"], rtol=1e-14)

    @given(st.integers(0, 10_000))
    def test_nonnegative_for_positive_coupling(self, seed):
        H, eta = small(seed=seed, scale=2.0)
        assert energy(H, eta) >= 0.0

    def test_terms_sum_exactly(self):
        H, eta = small()
        assert energy(H, eta) == float(sum(H.energy_terms(eta).values()))

    def test_lattice_mismatch(self):
        H, _ = small()
        with pytest.raises(DimensionError):
            energy(H, PhaseVector.zero(SpatialLattice(3)))

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValidationError):
            FieldHamiltonian(SpatialLattice(2), spacing=0.0)
        with pytest.raises(ValidationError):
            FieldHamiltonian(SpatialLattice(2), mass=-1.0)

    def test_force_is_minus_gradient(self):
        H, eta = small(coupling=0.3)
        x = eta.coords
        n = H.lattice.site_count

        def pot(phi):
            return H.energy_coords(np.concatenate([phi, np.zeros(n)]))

        grad = np.array([fd_derivative(lambda s, i=i: pot(x[:n] + s * np.eye(n)[i]), 1, 1e-3) for i in range(n)])
        assert np.max(np.abs(grad - H.potential_gradient(x[:n]))) <= 1e-9

    def test_quadratic_part_matches(self):
        H, eta = small(coupling=0.0)
        assert np.isclose(H.quadratic_part()(eta), energy(H, eta), rtol=1e-13)


class TestEvolution:
    def test_linear_reduction(self):
        H, eta = small(coupling=0.0)
        traj = nonlinear_evolve(H, eta, 1.0, 1e-4, record_every=10_000)
        exact = evolve_linear(build_generator(H.quadratic_part()), 1.0) @ eta.coords
        assert np.max(np.abs(traj.final.coords - exact)) <= 1e-6

    def test_free_particle(self):
        lat = SpatialLattice.uniform(5)
        H = FieldHamiltonian(lat, 0.0, 0.0)
        eta = PhaseVector.from_arrays(lat, np.full(5, 0.3), np.full(5, -0.7))
        traj = nonlinear_evolve(H, eta, 2.0, 0.1)
        for t, x in zip(traj.times, traj.states):
            assert np.allclose(x[:5], 0.3 - 0.7 * t, atol=1e-13)
            assert np.allclose(x[5:], -0.7, atol=1e-15)

    def test_reversibility(self):
        H, eta = small(coupling=0.5)
        fwd = nonlinear_evolve(H, eta, 1.0, 1e-3, record_every=1000).final
        back = nonlinear_evolve(H, fwd, -1.0, 1e-3, record_every=1000).final
        assert np.max(np.abs(back.coords - eta.coords)) <= 1e-9

    def test_reference_energy_drift(self):
        H, eta = reference_phi4_config()
        traj = nonlinear_evolve(H, eta, 10.0, 1e-3, record_every=100)
        energies = [H.energy_coords(x) for x in traj.states]
        assert len(traj.times) == 101
        assert max(abs(e - energies[0]) for e in energies) <= 1e-6

    def test_momentum_conserved_when_translation_invariant(self):
        H, eta = small(sites=6, mass=0.0, coupling=0.0)
        traj = nonlinear_evolve(H, eta, 3.0, 1e-2)
        p0 = total_momentum(eta)
        assert max(abs(total_momentum(PhaseVector.from_coords(H.lattice, x)) - p0) for x in traj.states) <= 1e-12

    def test_poisson_bracket_consistency(self):
        H, eta = small(coupling=0.2)
        dt = 1e-4
        traj = nonlinear_evolve(H, eta, 0.5, dt, record_every=1)
        k = 2500
        n = H.lattice.site_count
        for i in (0, n, n + 2):
            f = lambda x, i=i: x[i]
            series = traj.states[k - 3 : k + 4, i]
            deriv = float(np.dot(series, [-1 / 60, 3 / 20, -3 / 4, 0, 3 / 4, -3 / 20, 1 / 60]) / dt)
            bracket = poisson_bracket(f, H.energy_coords, PhaseVector.from_coords(H.lattice, traj.states[k]), h=1e-4)
            assert abs(deriv - bracket.real) <= 1e-6

    def test_stability_guard(self):
        H, eta = small(spacing=1.0)
        with pytest.raises(GuardError, match="a/2"):
            nonlinear_evolve(H, eta, 1.0, 0.6)
        with pytest.raises(ValidationError):
            nonlinear_evolve(H, eta, 1.0, 0.0)

    def test_singular_trajectory(self):
        lat = SpatialLattice(1)
        H = FieldHamiltonian(lat, 0.0, -1.0)
        eta = PhaseVector.from_arrays(lat, [2.0], [0.0])
        with pytest.raises(SingularTrajectoryError) as info:
            nonlinear_evolve(H, eta, 10.0, 1e-3)
        assert info.value.trajectory is not None
        assert len(info.value.trajectory) >= 2


class TestFlowSymplecticity:
    def test_linear_flow(self):
        H, eta = small(coupling=0.0)
        assert flow_symplecticity(H, eta, 0.5, 1e-3) <= 1e-8

    def test_quartic_flow(self):
        H, eta = small(sites=3, coupling=0.1)
        assert flow_symplecticity(H, eta, 0.5, 1e-3) <= 1e-5

    def test_guard_applies(self):
        H, eta = small()
        with pytest.raises(GuardError):
            flow_symplecticity(H, eta, 0.5, 1.0)
