"""Quadratic Hamiltonians, their generators and linear evolution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, lu_factor, lu_solve

from .errors import DimensionError, ValidationError
from .lattice import SpatialLattice
from .symplectic import PhaseVector, poisson_tensor, symplectic_matrix

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    """``H(eta) = 1/2 x^T H x`` for a symmetric form matrix over phase coordinates."""

    lattice: SpatialLattice
    form_matrix: np.ndarray

    def __post_init__(self):
        h = np.array(self.form_matrix, dtype=float)
        dim = 2 * self.lattice.site_count
        if h.shape != (dim, dim):
            raise DimensionError(f"form matrix must be {dim}x{dim}, got {h.shape}")
        asym = float(np.max(np.abs(h - h.T))) if h.size else 0.0
        if asym > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(h)))):
            raise ValidationError(f"Hamiltonian form is not symmetric (max asymmetry {asym:.3e})")
        h.setflags(write=False)
        object.__setattr__(self, "form_matrix", h)

    @classmethod
    def oscillator_chain(
        cls, lattice: SpatialLattice, omega: float = 1.0, coupling: float = 0.0, periodic: bool = True
    ) -> "QuadraticHamiltonian":
        """``1/2 sum mu (pi^2 + omega^2 phi^2) + 1/2 coupling sum mu (phi_{i+1} - phi_i)^2``."""
        n = lattice.site_count
        mu = lattice.measure_weights
        v = np.diag(omega**2 * mu)
        if coupling and n > 1:
            bonds = range(n) if periodic else range(n - 1)
            for i in bonds:
                j = (i + 1) % n
                if j == i:
                    continue
                w = coupling * mu[i]
                v[i, i] += w
                v[j, j] += w
                v[i, j] -= w
                v[j, i] -= w
        k = np.diag(mu)
        z = np.zeros((n, n))
        return cls(lattice, np.block([[v, z], [z, k]]))

    def __call__(self, eta: PhaseVector) -> float:
        x = eta.coords
        return 0.5 * float(x @ self.form_matrix @ x)

    def energy_coords(self, x: np.ndarray) -> float:
        return 0.5 * float(x @ self.form_matrix @ x)

    @property
    def is_separable(self) -> bool:
        n = self.lattice.site_count
        return not np.any(self.form_matrix[:n, n:])


@dataclass(frozen=True, eq=False)
class GeneratorOperator:
    """Generator ``Hhat`` of ``d eta/dt = Hhat eta``, anti-self-adjoint for Omega."""

    lattice: SpatialLattice
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        n2 = 2 * self.lattice.site_count
        if m.shape != (n2, n2):
            raise DimensionError(f"generator must be {n2}x{n2}, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        res = self.adjointness_residual()
        scale = max(1.0, float(np.max(np.abs(m)))) * float(np.max(self.lattice.measure_weights))
        if res > 1e-12 * scale:
            raise ValidationError(f"generator fails anti-self-adjointness (residual {res:.3e})")

    def adjointness_residual(self) -> float:
        """``max |Hhat^T W + W Hhat|``: zero iff ``Hhat^dag = -Hhat`` for Omega."""
        w = symplectic_matrix(self.lattice)
        return float(np.max(np.abs(self.matrix.T @ w + w @ self.matrix)))

    def form_matrix(self) -> np.ndarray:
        """Recover the symmetric Hamiltonian form: ``H = -W Hhat``."""
        return -symplectic_matrix(self.lattice) @ self.matrix

    def hamiltonian(self) -> QuadraticHamiltonian:
        h = self.form_matrix()
        return QuadraticHamiltonian(self.lattice, 0.5 * (h + h.T))


def build_generator(H: QuadraticHamiltonian) -> GeneratorOperator:
    """Raise the first index of ``H_AB`` with the Poisson tensor."""
    return GeneratorOperator(H.lattice, poisson_tensor(H.lattice) @ H.form_matrix)


def evolve_linear(gen: GeneratorOperator, t: float) -> np.ndarray:
    """``U(t) = exp(Hhat t)`` by scaling-and-squaring Pade."""
    return expm(gen.matrix * float(t))


@dataclass
class Trajectory:
    """Sampled states along an evolution; ``states[k]`` are flat phase coordinates at ``times[k]``."""

    lattice: SpatialLattice
    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> PhaseVector:
        return PhaseVector.from_coords(self.lattice, self.states[-1])

    def __len__(self):
        return len(self.times)


def _step_schedule(t: float, dt: float) -> list[float]:
    if dt <= 0:
        raise ValidationError(f"time step must be positive, got {dt}")
    sign = 1.0 if t >= 0 else -1.0
    n_full = int(np.floor(abs(t) / dt + 1e-9))
    steps = [sign * dt] * n_full
    rest = abs(t) - n_full * dt
    if rest > 1e-12 * max(1.0, abs(t)):
        steps.append(sign * rest)
    return steps


def integrate_hamilton(H: QuadraticHamiltonian, eta0: PhaseVector, t: float, dt: float, record_every: int = 1) -> Trajectory:
    """Integrate Hamilton's equations for a quadratic Hamiltonian.

    Separable forms (no ``phi``-``pi`` cross block) use kick-drift-kick
    Stormer-Verlet.  A non-separable form falls back to the implicit midpoint
    rule, which is also symplectic and, for linear flows, a Cayley transform.
    A final partial step is taken when ``t`` is not a multiple of ``dt``.
    """
    lat = H.lattice
    n = lat.site_count
    mu = lat.measure_weights
    steps = _step_schedule(t, dt)
    x = eta0.coords.copy()
    times, states = [0.0], [x.copy()]
    now = 0.0

    if H.is_separable:
        v = H.form_matrix[:n, :n]
        k = H.form_matrix[n:, n:]
        for s, h in enumerate(steps, start=1):
            phi, pi = x[:n], x[n:]
            pi = pi - 0.5 * h * (v @ phi) / mu
            phi = phi + h * (k @ pi) / mu
            pi = pi - 0.5 * h * (v @ phi) / mu
            x = np.concatenate([phi, pi])
            now += h
            if s % record_every == 0 or s == len(steps):
                times.append(now)
                states.append(x.copy())
    else:
        a = poisson_tensor(lat) @ H.form_matrix
        eye = np.eye(2 * n)
        cache = {}
        for s, h in enumerate(steps, start=1):
            if h not in cache:
                cache[h] = (lu_factor(eye - 0.5 * h * a), eye + 0.5 * h * a)
            lu, rhs = cache[h]
            x = lu_solve(lu, rhs @ x)
            now += h
            if s % record_every == 0 or s == len(steps):
                times.append(now)
                states.append(x.copy())
    return Trajectory(lat, np.array(times), np.array(states))
