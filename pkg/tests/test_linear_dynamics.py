import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamfield.errors import ValidationError
from hamfield.lattice import SpatialLattice
from hamfield.linear_dynamics import (
    GeneratorOperator,
    QuadraticHamiltonian,
    build_generator,
    evolve_linear,
    integrate_hamilton,
)
from hamfield.symplectic import PhaseVector, omega, pullback_residual
from oracles import oscillator_propagator

ONE = SpatialLattice(1)


def oscillator(omega_=2.0):
    return QuadraticHamiltonian(ONE, np.diag([omega_**2, 1.0]))


def chain(n=6, spacing=0.5):
    return QuadraticHamiltonian.oscillator_chain(SpatialLattice.uniform(n, spacing), 1.2, 0.4)


def test_form_must_be_symmetric():
    with pytest.raises(ValidationError):
        QuadraticHamiltonian(ONE, np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_oscillator_generator():
    assert np.allclose(build_generator(oscillator()).matrix, [[0, 1], [-4, 0]], atol=0)


def test_zero_hamiltonian():
    assert not np.any(build_generator(QuadraticHamiltonian(ONE, np.zeros((2, 2)))).matrix)


def test_generator_is_anti_self_adjoint():
    assert build_generator(chain()).adjointness_residual() <= 1e-12


def test_non_hamiltonian_generator_rejected():
    with pytest.raises(ValidationError):
        GeneratorOperator(ONE, np.eye(2))


@given(st.integers(0, 2**32 - 1))
def test_energy_round_trip(seed):
    r = np.random.default_rng(seed)
    H = chain()
    gen = build_generator(H)
    eta = PhaseVector.random(H.lattice, r)
    g_eta = PhaseVector.from_coords(H.lattice, gen.matrix @ eta.coords)
    # with Omega(x, y) = x^T W y and Hhat = P H the round trip reads H = 1/2 Omega(Hhat eta, eta)
    assert np.isclose(H(eta), 0.5 * omega(g_eta, eta), rtol=1e-12)
    assert np.allclose(gen.hamiltonian().form_matrix, H.form_matrix, atol=1e-12)


def test_quarter_rotation():
    U = evolve_linear(build_generator(oscillator()), np.pi / 4)
    assert np.allclose(U, [[0, 0.5], [-2, 0]], atol=1e-14)


def test_identity_at_zero():
    assert np.array_equal(evolve_linear(build_generator(chain()), 0.0), np.eye(12))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_group_law(t, s):
    gen = build_generator(chain())
    lhs = evolve_linear(gen, t + s)
    rhs = evolve_linear(gen, t) @ evolve_linear(gen, s)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


@given(st.floats(-5, 5))
def test_flow_symplectic_and_conservative(t):
    H = chain()
    U = evolve_linear(build_generator(H), t)
    assert pullback_residual(U, H.lattice) <= 1e-10
    x = np.linspace(-1, 1, 12)
    assert abs(H.energy_coords(U @ x) - H.energy_coords(x)) <= 1e-10


def test_closed_form_oscillator():
    for t in [0.3, 1.7]:
        U = evolve_linear(build_generator(oscillator(1.7)), t)
        assert np.allclose(U, oscillator_propagator(1.7, t), atol=1e-13)


def test_integrator_quarter_period():
    eta = PhaseVector.from_coords(ONE, [0.3, -0.8])
    traj = integrate_hamilton(oscillator(), eta, np.pi / 4, 1e-4)
    exact = oscillator_propagator(2.0, np.pi / 4) @ eta.coords
    assert np.max(np.abs(traj.final.coords - exact)) <= 1e-6


def test_integrator_zero_hamiltonian():
    eta = PhaseVector.from_coords(ONE, [0.3, -0.8])
    traj = integrate_hamilton(QuadraticHamiltonian(ONE, np.zeros((2, 2))), eta, 1.0, 0.1)
    assert np.all(traj.states == eta.coords)


def test_integrator_energy_drift():
    H = oscillator()
    eta = PhaseVector.from_coords(ONE, [0.3, -0.8])
    traj = integrate_hamilton(H, eta, 1.0, 1e-4, record_every=10)
    assert len(traj.times) == 1001
    e = np.array([H.energy_coords(x) for x in traj.states])
    assert np.max(np.abs(e - e[0])) <= 1e-8


def test_integrator_energy_error_is_second_order(rng):
    H = chain()
    eta = PhaseVector.random(H.lattice, rng)
    drift = []
    for dt in [4e-3, 2e-3, 1e-3]:
        e = np.array([H.energy_coords(x) for x in integrate_hamilton(H, eta, 2.0, dt).states])
        drift.append(np.max(np.abs(e - e[0])))
    assert 3.5 < drift[0] / drift[1] < 4.5 and 3.5 < drift[1] / drift[2] < 4.5


def test_integrator_non_separable(rng):
    lat = SpatialLattice(2)
    a = rng.normal(size=(4, 4))
    H = QuadraticHamiltonian(lat, a @ a.T + np.eye(4))
    assert not H.is_separable
    eta = PhaseVector.random(lat, rng)
    traj = integrate_hamilton(H, eta, 0.5, 1e-3)
    exact = evolve_linear(build_generator(H), 0.5) @ eta.coords
    assert np.max(np.abs(traj.final.coords - exact)) <= 1e-5
    assert abs(H.energy_coords(traj.final.coords) - H(eta)) <= 1e-12 * max(1.0, H(eta))


def test_backward_integration(rng):
    H = chain()
    eta = PhaseVector.random(H.lattice, rng)
    fwd = integrate_hamilton(H, eta, 0.5, 1e-3).final
    back = integrate_hamilton(H, fwd, -0.5, 1e-3).final
    assert np.max(np.abs(back.coords - eta.coords)) <= 1e-12
