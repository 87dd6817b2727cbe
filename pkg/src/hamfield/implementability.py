"""Finite-dimensional Hilbert-Schmidt diagnostics for Bogoliubov maps.

At finite dimension every operator is Hilbert-Schmidt, so the criterion
"[S, J] is Hilbert-Schmidt" cannot be tested literally.  The scan here uses
the growth of ``||[S_d, J_d]||_F`` with lattice size as a proxy, and every
report says so.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .complex_structure import ComplexStructure, polar_complex_structure
from .errors import ConstructionError, ValidationError
from .lattice import SpatialLattice
from .linear_dynamics import QuadraticHamiltonian, build_generator, evolve_linear
from .symplectic import pullback_residual

PROXY_NOTE = (
    "finite-dimensional proxy: growth of the Frobenius norm of [S, J] with lattice size "
    "stands in for the Hilbert-Schmidt criterion"
)
BOUNDED_RELATIVE_VARIATION = 0.05
ZERO_TOL = 1e-10


def hs_norm_commutator(S, J: ComplexStructure, tol: float = 1e-10) -> float:
    """Frobenius norm of ``S J - J S`` after validating ``S`` and ``J``."""
    S = np.asarray(S, dtype=float)
    if not isinstance(J, ComplexStructure):
        raise ValidationError("J must be a validated ComplexStructure")
    if S.shape != J.matrix.shape:
        raise ValidationError(f"S has shape {S.shape}, J has {J.matrix.shape}")
    res = pullback_residual(S, J.lattice)
    scale = max(1.0, float(np.max(np.abs(S))) ** 2)
    if res > tol * scale:
        raise ValidationError(f"S is not symplectic (pullback residual {res:.3e})")
    return float(np.linalg.norm(S @ J.matrix - J.matrix @ S, "fro"))


@dataclass
class HSReport:
    """Commutator norms across a ladder of lattice sizes with a trend tag."""

    lattice_sizes: list
    hs_norms: list
    trend: str = field(init=False)
    note: str = PROXY_NOTE

    def __post_init__(self):
        if len(self.lattice_sizes) != len(self.hs_norms):
            raise ValidationError("sizes and norms differ in length")
        if any(n < 0 for n in self.hs_norms):
            raise ValidationError("norms must be nonnegative")
        order = np.argsort(self.lattice_sizes, kind="stable")
        self.lattice_sizes = [int(self.lattice_sizes[i]) for i in order]
        self.hs_norms = [float(self.hs_norms[i]) for i in order]
        self.trend = classify_trend(self.hs_norms)

    def to_dict(self) -> dict:
        return {"lattice_sizes": self.lattice_sizes, "hs_norms": self.hs_norms, "trend": self.trend, "note": self.note}

    def rows(self) -> list:
        return [{"size": s, "hs_norm": n} for s, n in zip(self.lattice_sizes, self.hs_norms)]


def classify_trend(norms: Sequence[float]) -> str:
    """``bounded`` / ``growing`` / ``inconclusive`` for a size-ordered norm sequence.

    bounded: relative variation at most 5% over the final half of the ladder
    (or every norm numerically zero).  growing: monotone increasing and ending
    above twice the first value.
    """
    norms = np.asarray(norms, dtype=float)
    if norms.size == 0:
        return "inconclusive"
    if np.all(norms <= ZERO_TOL):
        return "bounded"
    if norms.size >= 2 and np.all(np.diff(norms) > 0) and norms[-1] > 2 * norms[0]:
        return "growing"
    tail = norms[norms.size // 2:]
    top = float(np.max(tail))
    if top > 0 and (top - float(np.min(tail))) / top <= BOUNDED_RELATIVE_VARIATION:
        return "bounded"
    return "inconclusive"


def implementability_scan(family: Callable[[int], tuple], sizes: Sequence[int]) -> HSReport:
    """Evaluate ``||[S_d, J_d]||_F`` for each size ``d`` produced by ``family``."""
    norms = []
    for d in sizes:
        try:
            S, J = family(int(d))
        except Exception as exc:
            raise ConstructionError(f"family construction failed at size {d}: {exc}") from exc
        norms.append(hs_norm_commutator(S, J))
    return HSReport(list(sizes), norms)


# reference families


def squeezing_family(r: float) -> Callable[[int], tuple]:
    """Identical squeezing ``diag(e^r, e^-r)`` on each of ``d`` unit-weight modes with standard ``J``."""

    def build(d: int):
        lat = SpatialLattice(d)
        S = np.diag(np.concatenate([np.full(d, np.exp(r)), np.full(d, np.exp(-r))]))
        return S, ComplexStructure.standard(lat)

    return build


def commuting_family(omega: float = 1.0, t: float = 0.7) -> Callable[[int], tuple]:
    """Free evolution ``exp(Hhat t)`` on an oscillator chain with its own polar ``J``."""
    def build(d: int):
        lat = SpatialLattice(d)
        gen = build_generator(QuadraticHamiltonian.oscillator_chain(lat, omega, 0.5))
        return evolve_linear(gen, t), polar_complex_structure(gen)

    return build


def periodic_laplacian(n: int, spacing: float) -> np.ndarray:
    """``-Delta`` with nearest-neighbor stencil and periodic wrap."""
    lap = 2.0 * np.eye(n)
    for i in range(n):
        lap[i, (i + 1) % n] -= 1.0
        lap[i, (i - 1) % n] -= 1.0
    return lap / spacing**2


def klein_gordon_chain(n: int, mass: float, spacing: float = 1.0) -> QuadraticHamiltonian:
    """``1/2 sum a (pi^2 + (grad phi)^2 + m^2 phi^2)`` on a periodic chain."""
    lat = SpatialLattice.uniform(n, spacing)
    k = periodic_laplacian(n, spacing) + mass**2 * np.eye(n)
    z = np.zeros((n, n))
    return QuadraticHamiltonian(lat, spacing * np.block([[k, z], [z, np.eye(n)]]))


def mass_shift_family(m_from: float = 1.0, m_to: float = 2.0, spacing: float = 1.0) -> Callable[[int], tuple]:
    """Bogoliubov map carrying the mass-``m_from`` vacuum structure to mass ``m_to``.

    ``S = diag(A, A^-1)`` with ``A = (w_from / w_to)^{1/2}`` and
    ``w_m = sqrt(-Delta + m^2)``, so that ``S J_from S^-1 = J_to``; the scan
    measures ``[S, J_from]``.
    """

    def build(n: int):
        lap = periodic_laplacian(n, spacing)
        evals, vecs = np.linalg.eigh(lap)
        w_from = np.sqrt(evals + m_from**2)
        w_to = np.sqrt(evals + m_to**2)
        a = (vecs * np.sqrt(w_from / w_to)) @ vecs.T
        a_inv = (vecs * np.sqrt(w_to / w_from)) @ vecs.T
        z = np.zeros((n, n))
        S = np.block([[a, z], [z, a_inv]])
        J = polar_complex_structure(klein_gordon_chain(n, m_from, spacing))
        return S, J

    return build
