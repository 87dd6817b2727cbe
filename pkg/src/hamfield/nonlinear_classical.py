"""Nonlinear lattice field dynamics for phi^4-type Hamiltonians.

The evolution ``d eta / dt = omega(grad H)`` with the gradient taken as a dual
vector through the weighted pairing reads ``d phi/dt = pi`` and
``d pi/dt = -(1/mu) dV/dphi``.  It is integrated with kick-drift-kick
Stormer-Verlet, which is explicit, time-reversible and symplectic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GuardError, SingularTrajectoryError, ValidationError
from .lattice import SpatialLattice
from .linear_dynamics import QuadraticHamiltonian, Trajectory, _step_schedule
from .symplectic import PhaseVector, fd_jacobian, pullback_residual

BLOWUP_NORM = 1e8


@dataclass(frozen=True, eq=False)
class FieldHamiltonian:
    """``H = 1/2 sum mu pi^2 + 1/2 sum mu (grad phi)^2 + 1/2 m^2 sum mu phi^2 + lambda sum mu phi^4``.

    The gradient is the periodic forward difference ``(phi_{i+1} - phi_i) / a``.
    """

    lattice: SpatialLattice
    mass: float = 0.0
    coupling: float = 0.0
    spacing: float = 1.0

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValidationError(f"lattice spacing must be positive, got {self.spacing}")
        if self.mass < 0:
            raise ValidationError(f"mass must be nonnegative, got {self.mass}")

    def _check(self, eta: PhaseVector):
        if not eta.lattice.same_as(self.lattice):
            raise DimensionError("phase vector lives on a different lattice")

    def _grad_phi(self, phi: np.ndarray) -> np.ndarray:
        return (np.roll(phi, -1) - phi) / self.spacing

    def energy_terms(self, eta: PhaseVector) -> dict:
        self._check(eta)
        mu = self.lattice.measure_weights
        phi, pi = eta.phi.values, eta.pi.values
        return {
            "kinetic": 0.5 * float(np.sum(mu * pi**2)),
            "gradient": 0.5 * float(np.sum(mu * self._grad_phi(phi) ** 2)),
            "mass": 0.5 * self.mass**2 * float(np.sum(mu * phi**2)),
            "interaction": self.coupling * float(np.sum(mu * phi**4)),
        }

    def energy_coords(self, x: np.ndarray) -> float:
        n = self.lattice.site_count
        mu = self.lattice.measure_weights
        phi, pi = x[:n], x[n:]
        g = self._grad_phi(phi)
        return float(
            0.5 * np.sum(mu * pi**2)
            + 0.5 * np.sum(mu * g**2)
            + 0.5 * self.mass**2 * np.sum(mu * phi**2)
            + self.coupling * np.sum(mu * phi**4)
        )

    def potential_gradient(self, phi: np.ndarray) -> np.ndarray:
        """Coordinate derivative ``dV/dphi_i``."""
        mu = self.lattice.measure_weights
        g = self._grad_phi(phi)
        flux = mu * g / self.spacing
        return np.roll(flux, 1) - flux + self.mass**2 * mu * phi + 4 * self.coupling * mu * phi**3

    def force(self, phi: np.ndarray) -> np.ndarray:
        """``d pi / dt = -(1/mu) dV/dphi``."""
        return -self.potential_gradient(phi) / self.lattice.measure_weights

    def vector_field(self, x: np.ndarray) -> np.ndarray:
        n = self.lattice.site_count
        return np.concatenate([x[n:], self.force(x[:n])])

    def quadratic_part(self) -> QuadraticHamiltonian:
        """The ``lambda = 0`` Hamiltonian as a :class:`QuadraticHamiltonian`."""
        n = self.lattice.site_count
        mu = self.lattice.measure_weights
        v = np.zeros((n, n))
        for i in range(n):
            j = (i + 1) % n
            w = mu[i] / self.spacing**2
            if j != i:
                v[i, i] += w
                v[j, j] += w
                v[i, j] -= w
                v[j, i] -= w
        v += np.diag(self.mass**2 * mu)
        z = np.zeros((n, n))
        return QuadraticHamiltonian(self.lattice, np.block([[v, z], [z, np.diag(mu)]]))


def energy(H: FieldHamiltonian, eta: PhaseVector) -> float:
    return float(sum(H.energy_terms(eta).values()))


def total_momentum(eta: PhaseVector) -> float:
    """``sum mu pi``, generator of constant shifts ``phi -> phi + c``."""
    return float(np.sum(eta.lattice.measure_weights * eta.pi.values))


def _verlet_steps(H: FieldHamiltonian, x: np.ndarray, steps, record_every: int, times0=0.0):
    n = H.lattice.site_count
    phi, pi = x[:n].copy(), x[n:].copy()
    times, states = [times0], [x.copy()]
    now = times0
    for s, h in enumerate(steps, start=1):
        pi = pi + 0.5 * h * H.force(phi)
        phi = phi + h * pi
        pi = pi + 0.5 * h * H.force(phi)
        now += h
        if s % record_every == 0 or s == len(steps):
            state = np.concatenate([phi, pi])
            times.append(now)
            states.append(state)
        norm = np.sqrt(np.dot(phi, phi) + np.dot(pi, pi))
        if not np.isfinite(norm) or norm > BLOWUP_NORM:
            traj = Trajectory(H.lattice, np.array(times), np.array(states))
            raise SingularTrajectoryError(f"singular trajectory: |eta| = {norm:.3e} at t = {now:.6g}", traj)
    return np.array(times), np.array(states)


def _guard(H: FieldHamiltonian, dt: float) -> None:
    if dt <= 0:
        raise ValidationError(f"time step must be positive, got {dt}")
    if dt > H.spacing / 2:
        raise GuardError(f"time step {dt} violates the stability guard dt <= a/2 = {H.spacing / 2}")


def nonlinear_evolve(H: FieldHamiltonian, eta0: PhaseVector, t: float, dt: float, record_every: int = 1) -> Trajectory:
    """Stormer-Verlet trajectory from ``eta0`` over time ``t`` (negative ``t`` runs backward)."""
    H._check(eta0)
    _guard(H, dt)
    times, states = _verlet_steps(H, eta0.coords, _step_schedule(t, dt), record_every)
    return Trajectory(H.lattice, times, states)


def flow_map(H: FieldHamiltonian, t: float, dt: float):
    """The time-``t`` Verlet flow as a function of flat coordinates."""
    _guard(H, dt)
    steps = _step_schedule(t, dt)

    def apply(x):
        return _verlet_steps(H, np.asarray(x, dtype=float), steps, len(steps) or 1)[1][-1]

    return apply


def flow_symplecticity(H: FieldHamiltonian, eta0: PhaseVector, t: float, dt: float, h: float = 1e-5) -> float:
    """Pullback residual ``max |DU^T W DU - W|`` of the finite-difference flow Jacobian."""
    H._check(eta0)
    jac = fd_jacobian(flow_map(H, t, dt), eta0.coords, h)
    return pullback_residual(jac, H.lattice)


def reference_phi4_config(sites: int = 16, mass: float = 1.0, coupling: float = 0.1, spacing: float = 1.0):
    """Reference phi^4 setup: one smooth standing wave plus a small second harmonic."""
    lat = SpatialLattice.uniform(sites, spacing, patch_size=max(1, sites // 4))
    x = np.arange(sites)
    phi = 0.5 * np.cos(2 * np.pi * x / sites) + 0.1 * np.sin(4 * np.pi * x / sites)
    pi = 0.2 * np.sin(2 * np.pi * x / sites)
    return FieldHamiltonian(lat, mass, coupling, spacing), PhaseVector.from_arrays(lat, phi, pi)
