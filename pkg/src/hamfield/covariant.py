"""Covariant checks on a 1+1D lattice Klein-Gordon field.

The field obeys the leapfrog discretization

    (phi^{n+1} - 2 phi^n + phi^{n-1}) / dt^2 = Delta phi^n - m^2 phi^n

on a periodic chain of ``N`` sites with spacing ``a``.  Retarded and advanced
kernels answer a unit spacetime impulse ``delta / (a dt)`` at one event; their
difference is the Pauli-Jordan function.  The surface form uses the centered
time difference that matches the stencil, which makes it exactly conserved.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GuardError, ValidationError
from .lattice import SpatialLattice
from .symplectic import PhaseVector, omega

SOLUTION_TOL = 1e-8


@dataclass(frozen=True)
class SpacetimeLattice:
    """``N`` periodic sites with spacing ``a`` and ``T`` steps of size ``dt`` (slices ``0..T``)."""

    sites: int
    steps: int
    spacing: float = 1.0
    dt: float = 0.5

    def __post_init__(self):
        if self.sites < 2 or self.steps < 2:
            raise ValidationError(f"need N, T >= 2, got N={self.sites}, T={self.steps}")
        if self.spacing <= 0 or self.dt <= 0:
            raise ValidationError("spacing and dt must be positive")
        if self.courant > 1 + 1e-12:
            raise GuardError(f"Courant ratio dt/a = {self.courant:.6g} exceeds 1")

    @property
    def courant(self) -> float:
        return self.dt / self.spacing

    @property
    def shape(self) -> tuple:
        return (self.steps + 1, self.sites)

    def spatial(self) -> SpatialLattice:
        return SpatialLattice.uniform(self.sites, self.spacing)

    def distance(self, x: int, y: int) -> int:
        d = abs(x - y) % self.sites
        return min(d, self.sites - d)

    def _kg(self, phi: np.ndarray, mass: float) -> np.ndarray:
        """``(-Delta + m^2) phi``."""
        lap = (np.roll(phi, -1) - 2 * phi + np.roll(phi, 1)) / self.spacing**2
        return mass**2 * phi - lap

    def step_forward(self, prev: np.ndarray, cur: np.ndarray, mass: float) -> np.ndarray:
        return 2 * cur - prev - self.dt**2 * self._kg(cur, mass)

    def step_backward(self, nxt: np.ndarray, cur: np.ndarray, mass: float) -> np.ndarray:
        return 2 * cur - nxt - self.dt**2 * self._kg(cur, mass)


@dataclass(frozen=True, eq=False)
class PropagatorKernel:
    """Response history to a unit impulse at ``source = (n0, x0)``."""

    lattice: SpacetimeLattice
    mass: float
    source: tuple
    kind: str
    values: np.ndarray

    def causal_violation(self) -> float:
        """Largest magnitude on the wrong side of the source time (exactly zero for a valid kernel)."""
        n0 = self.source[0]
        wrong = self.values[:n0] if self.kind == "retarded" else self.values[n0 + 1:]
        return float(np.max(np.abs(wrong))) if wrong.size else 0.0

    def cone_violation(self) -> float:
        """Largest magnitude outside the stencil cone ``dist(x, x0) <= |n - n0| - 1``."""
        n0, x0 = self.source
        worst = 0.0
        for n in range(self.values.shape[0]):
            k = abs(n - n0)
            for x in range(self.lattice.sites):
                if self.lattice.distance(x, x0) > k - 1:
                    worst = max(worst, abs(self.values[n, x]))
        return worst

    def support_edge(self, n: int) -> int:
        """Largest distance from ``x0`` with a nonzero value at slice ``n`` (-1 if none)."""
        row = self.values[n]
        nz = [self.lattice.distance(x, self.source[1]) for x in range(self.lattice.sites) if row[x] != 0]
        return max(nz, default=-1)

    def rows(self) -> list:
        dt = self.lattice.dt
        a = self.lattice.spacing
        return [
            {"t": n * dt, "x": x * a, "value": float(self.values[n, x])}
            for n in range(self.values.shape[0])
            for x in range(self.lattice.sites)
        ]


def _check_event(lat: SpacetimeLattice, event) -> tuple:
    n, x = int(event[0]), int(event[1])
    if not (0 <= n <= lat.steps and 0 <= x < lat.sites):
        raise ValidationError(f"event {event} outside the lattice")
    return n, x


@lru_cache(maxsize=4096)
def _retarded_values(lat: SpacetimeLattice, mass: float, n0: int, x0: int) -> np.ndarray:
    vals = np.zeros(lat.shape)
    if n0 < lat.steps:
        vals[n0 + 1, x0] = lat.dt / lat.spacing
        for n in range(n0 + 1, lat.steps):
            vals[n + 1] = lat.step_forward(vals[n - 1], vals[n], mass)
    vals.setflags(write=False)
    return vals


@lru_cache(maxsize=4096)
def _advanced_values(lat: SpacetimeLattice, mass: float, n0: int, x0: int) -> np.ndarray:
    vals = np.zeros(lat.shape)
    if n0 > 0:
        vals[n0 - 1, x0] = lat.dt / lat.spacing
        for n in range(n0 - 1, 0, -1):
            vals[n - 1] = lat.step_backward(vals[n + 1], vals[n], mass)
    vals.setflags(write=False)
    return vals


def retarded_propagator(lat: SpacetimeLattice, mass: float, source) -> PropagatorKernel:
    """Forward leapfrog response, zero at and before the source slice."""
    n0, x0 = _check_event(lat, source)
    return PropagatorKernel(lat, mass, (n0, x0), "retarded", _retarded_values(lat, float(mass), n0, x0))


def advanced_propagator(lat: SpacetimeLattice, mass: float, source) -> PropagatorKernel:
    """Backward leapfrog response, zero at and after the source slice."""
    n0, x0 = _check_event(lat, source)
    return PropagatorKernel(lat, mass, (n0, x0), "advanced", _advanced_values(lat, float(mass), n0, x0))


def time_reflect(values: np.ndarray, n0: int) -> np.ndarray:
    """Reflect a history about slice ``n0``; slices without a mirror image are zero."""
    out = np.zeros_like(values)
    steps = values.shape[0] - 1
    for n in range(steps + 1):
        m = 2 * n0 - n
        if 0 <= m <= steps:
            out[n] = values[m]
    return out


def pauli_jordan(lat: SpacetimeLattice, mass: float, event, source) -> float:
    """``Delta(event; source) = R(event; source) - A(event; source)``."""
    n, x = _check_event(lat, event)
    n0, x0 = _check_event(lat, source)
    return float(_retarded_values(lat, float(mass), n0, x0)[n, x] - _advanced_values(lat, float(mass), n0, x0)[n, x])


def pauli_jordan_history(lat: SpacetimeLattice, mass: float, source) -> np.ndarray:
    n0, x0 = _check_event(lat, source)
    return _retarded_values(lat, float(mass), n0, x0) - _advanced_values(lat, float(mass), n0, x0)


def pauli_jordan_time_derivative(lat: SpacetimeLattice, mass: float, n: int, x: int, source) -> float:
    """Centered time difference of ``Delta`` at slice ``n``."""
    hist = pauli_jordan_history(lat, mass, source)
    if not 1 <= n <= lat.steps - 1:
        raise ValidationError("centered difference needs 1 <= n <= T-1")
    return float((hist[n + 1, x] - hist[n - 1, x]) / (2 * lat.dt))


# solutions and the surface form


def solve(lat: SpacetimeLattice, mass: float, phi0, phi1) -> np.ndarray:
    """Homogeneous history from the first two slices."""
    hist = np.zeros(lat.shape)
    hist[0] = np.asarray(phi0, dtype=float)
    hist[1] = np.asarray(phi1, dtype=float)
    for n in range(1, lat.steps):
        hist[n + 1] = lat.step_forward(hist[n - 1], hist[n], mass)
    return hist


def solution_residual(lat: SpacetimeLattice, mass: float, hist: np.ndarray) -> float:
    """Largest violation of the discrete field equation on interior slices."""
    hist = np.asarray(hist, dtype=float)
    if hist.shape != lat.shape:
        raise ValidationError(f"history must have shape {lat.shape}, got {hist.shape}")
    worst = 0.0
    for n in range(1, lat.steps):
        r = (hist[n + 1] - 2 * hist[n] + hist[n - 1]) / lat.dt**2 + lat._kg(hist[n], mass)
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


def canonical_data(lat: SpacetimeLattice, hist: np.ndarray, n: int) -> PhaseVector:
    """``(phi, Pi)`` at slice ``n`` with ``Pi`` the centered time difference."""
    if not 1 <= n <= lat.steps - 1:
        raise ValidationError("slice must satisfy 1 <= n <= T-1")
    pi = (hist[n + 1] - hist[n - 1]) / (2 * lat.dt)
    return PhaseVector.from_arrays(lat.spatial(), hist[n], pi)


def surface_form(lat: SpacetimeLattice, mass: float, phi1: np.ndarray, phi2: np.ndarray, n: int, tol: float = SOLUTION_TOL) -> float:
    """``sum_x a (phi1 dt phi2 - phi2 dt phi1)`` at slice ``n``; inputs must be solutions."""
    for label, hist in (("phi1", phi1), ("phi2", phi2)):
        res = solution_residual(lat, mass, hist)
        if res > tol:
            raise ValidationError(f"{label} is not a solution of the discrete field equation (residual {res:.3e})")
    a = canonical_data(lat, phi1, n)
    b = canonical_data(lat, phi2, n)
    return lat.spacing * float(np.sum(a.phi.values * b.pi.values - b.phi.values * a.pi.values))


def slice_form(lat: SpacetimeLattice, phi1: np.ndarray, phi2: np.ndarray, n: int) -> float:
    """Symplectic form of the induced canonical data at slice ``n`` (weights ``a``)."""
    return omega(canonical_data(lat, phi1, n), canonical_data(lat, phi2, n))


def solution_from_sources(lat: SpacetimeLattice, mass: float, sources: dict) -> np.ndarray:
    """``sum_e Delta(.; e) f(e) a dt`` for a source map ``{(n, x): f}``."""
    out = np.zeros(lat.shape)
    for event, f in sources.items():
        out += pauli_jordan_history(lat, mass, event) * f
    return out * lat.spacing * lat.dt


def pauli_jordan_pairing(lat: SpacetimeLattice, mass: float, f: dict, g: dict) -> float:
    """``sum_{e, e'} f(e) Delta(e; e') g(e') (a dt)^2``."""
    total = 0.0
    for e, fe in f.items():
        for e2, ge in g.items():
            total += fe * pauli_jordan(lat, mass, e, e2) * ge
    return total * (lat.spacing * lat.dt) ** 2


def random_solution(lat: SpacetimeLattice, mass: float, rng: np.random.Generator) -> np.ndarray:
    return solve(lat, mass, rng.normal(size=lat.sites), rng.normal(size=lat.sites))


def covariant_form(lat: SpacetimeLattice, mass: float, f: dict, g: dict) -> float:
    """Pairing of the solutions generated by sources ``f`` and ``g``.

    Normalized to agree with the surface form of ``solution_from_sources(f)``
    and ``solution_from_sources(g)``, which fixes it as ``-pairing(f, g)``.
    """
    return -pauli_jordan_pairing(lat, mass, f, g)


def random_sources(lat: SpacetimeLattice, rng: np.random.Generator, count: int = 3) -> dict:
    """Sources at distinct random events, away from the first and last slice."""
    events = set()
    while len(events) < count:
        events.add((int(rng.integers(1, lat.steps)), int(rng.integers(0, lat.sites))))
    return {e: float(rng.normal()) for e in sorted(events)}
