"""Phase space, the symplectic form, Poisson brackets and symplectomorphisms.

Phase vectors ``eta = (phi, pi)`` are pairs of real field functions.  Dual
vectors are represented as field-function pairs through the weighted pairing,
so one form ``Omega(eta, eta') = <phi, pi'> - <pi, phi'>`` serves both as the
symplectic form on phase space and on its dual.  In flat coordinates
``x = (phi_1..phi_N, pi_1..pi_N)`` this is ``x^T W x'`` with
``W = [[0, M], [-M, 0]]`` and ``M = diag(mu)``; the Poisson tensor that
contracts coordinate gradients is ``[[0, M^-1], [-M^-1, 0]]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, EvaluationError, ValidationError
from .lattice import FieldFunction, SpatialLattice
from .polynomial import PolynomialObservable


@dataclass(frozen=True, eq=False)
class PhaseVector:
    """A pair ``(phi, pi)`` of real field functions on one lattice."""

    phi: FieldFunction
    pi: FieldFunction

    def __post_init__(self):
        if not self.phi.lattice.same_as(self.pi.lattice):
            raise DimensionError("phi and pi live on different lattices")

    @property
    def lattice(self) -> SpatialLattice:
        return self.phi.lattice

    @classmethod
    def from_coords(cls, lattice: SpatialLattice, x) -> "PhaseVector":
        x = np.asarray(x, dtype=float)
        n = lattice.site_count
        if x.shape != (2 * n,):
            raise DimensionError(f"expected {2 * n} phase coordinates, got shape {x.shape}")
        return cls(FieldFunction(x[:n], lattice), FieldFunction(x[n:], lattice))

    @classmethod
    def from_arrays(cls, lattice: SpatialLattice, phi, pi) -> "PhaseVector":
        return cls(FieldFunction(np.asarray(phi, dtype=float), lattice), FieldFunction(np.asarray(pi, dtype=float), lattice))

    @classmethod
    def zero(cls, lattice: SpatialLattice) -> "PhaseVector":
        return cls.from_coords(lattice, np.zeros(2 * lattice.site_count))

    @classmethod
    def random(cls, lattice: SpatialLattice, rng: np.random.Generator, scale: float = 1.0) -> "PhaseVector":
        return cls.from_coords(lattice, scale * rng.normal(size=2 * lattice.site_count))

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.phi.values, self.pi.values])

    def __add__(self, other: "PhaseVector") -> "PhaseVector":
        return PhaseVector(self.phi + other.phi, self.pi + other.pi)

    def __sub__(self, other: "PhaseVector") -> "PhaseVector":
        return PhaseVector(self.phi - other.phi, self.pi - other.pi)

    def __neg__(self) -> "PhaseVector":
        return PhaseVector(-self.phi, -self.pi)

    def __mul__(self, s: float) -> "PhaseVector":
        return PhaseVector(self.phi * s, self.pi * s)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))


def symplectic_matrix(lattice: SpatialLattice) -> np.ndarray:
    """Matrix ``W`` of the symplectic form in phase coordinates."""
    n = lattice.site_count
    m = np.diag(lattice.measure_weights)
    z = np.zeros((n, n))
    return np.block([[z, m], [-m, z]])


def poisson_tensor(lattice: SpatialLattice) -> np.ndarray:
    """Contravariant form contracting coordinate gradients: ``{f, g} = df^T P dg``."""
    n = lattice.site_count
    m = np.diag(1.0 / lattice.measure_weights)
    z = np.zeros((n, n))
    return np.block([[z, m], [-m, z]])


def omega(eta: PhaseVector, eta2: PhaseVector) -> float:
    """``Omega(eta, eta') = sum_i mu_i (phi_i pi'_i - pi_i phi'_i)``."""
    if not eta.lattice.same_as(eta2.lattice):
        raise DimensionError("phase vectors live on different lattices")
    w = eta.lattice.measure_weights
    return float(np.sum(w * (eta.phi.values * eta2.pi.values - eta.pi.values * eta2.phi.values)))


def omega_map(eta: PhaseVector) -> PhaseVector:
    """The map ``(phi, pi) -> (pi, -phi)`` from dual to phase vectors."""
    return PhaseVector(eta.pi, -eta.phi)


def dual_evaluate(psi: PhaseVector, eta: PhaseVector) -> float:
    """Evaluate the dual vector ``psi`` on ``eta`` through the weighted pairing."""
    if not psi.lattice.same_as(eta.lattice):
        raise DimensionError("phase vectors live on different lattices")
    w = psi.lattice.measure_weights
    return float(np.sum(w * (psi.phi.values * eta.phi.values + psi.pi.values * eta.pi.values)))


# observables and brackets


@dataclass(frozen=True)
class Observable:
    """A scalar function of phase coordinates with an optional analytic gradient."""

    func: Callable[[np.ndarray], complex]
    grad: Callable[[np.ndarray], np.ndarray] | None = None

    @classmethod
    def from_polynomial(cls, p: PolynomialObservable) -> "Observable":
        return cls(p, p.gradient)

    def __call__(self, x):
        return self.func(np.asarray(x))


def default_step(x: np.ndarray) -> float:
    return 1e-5 * (1.0 + float(np.linalg.norm(x)))


def fd_gradient(f: Callable, x: np.ndarray, h: float | None = None) -> np.ndarray:
    """Centered finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    h = default_step(x) if h is None else h
    out = np.empty(x.size, dtype=complex)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        out[k] = (f(x + e) - f(x - e)) / (2 * h)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("observable is not differentiable at the requested point")
    return out


def _coordinate_gradient(f, x: np.ndarray, h: float | None) -> np.ndarray:
    if isinstance(f, PolynomialObservable):
        return f.gradient(x)
    if isinstance(f, Observable) and f.grad is not None:
        g = np.asarray(f.grad(x))
        if not np.all(np.isfinite(g)):
            raise EvaluationError("analytic gradient is not finite")
        return g
    try:
        return fd_gradient(f, x, h)
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"cannot differentiate observable: {exc}") from exc


def poisson_bracket(f, g, eta: PhaseVector, h: float | None = None) -> complex:
    """``{f, g}(eta) = Omega(grad f, grad g)`` with gradients as dual vectors.

    ``f`` and ``g`` may be polynomials, :class:`Observable` instances or plain
    callables of the phase coordinates (finite differences with step ``h``).
    """
    x = eta.coords
    df = _coordinate_gradient(f, x, h)
    dg = _coordinate_gradient(g, x, h)
    val = df @ poisson_tensor(eta.lattice) @ dg
    return complex(val)


def poisson_bracket_poly(p: PolynomialObservable, q: PolynomialObservable, lattice: SpatialLattice) -> PolynomialObservable:
    """Exact Poisson bracket of two polynomials as a polynomial."""
    n = lattice.site_count
    if p.nvars != 2 * n or q.nvars != 2 * n:
        raise DimensionError("polynomials do not match the lattice's phase dimension")
    out = PolynomialObservable(2 * n)
    for i, mu in enumerate(lattice.measure_weights):
        out = out + (p.derivative(i) * q.derivative(n + i) - p.derivative(n + i) * q.derivative(i)) * (1.0 / mu)
    return out


# symplectic maps


def fd_jacobian(apply: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float | None = None) -> np.ndarray:
    """Centered finite-difference Jacobian of a vector map."""
    x = np.asarray(x, dtype=float)
    h = default_step(x) if h is None else h
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((np.asarray(apply(x + e)) - np.asarray(apply(x - e))) / (2 * h))
    return np.column_stack(cols)


@dataclass(frozen=True, eq=False)
class SymplecticMap:
    """A (candidate) symplectomorphism of phase space in coordinates.

    ``apply`` and ``derivative`` act on flat coordinate arrays.  Linear maps
    carry their ``matrix``; polynomial maps carry one component polynomial per
    coordinate so observables can be composed exactly.
    """

    lattice: SpatialLattice
    apply: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray] | None = None
    is_linear: bool = False
    matrix: np.ndarray | None = None
    components: tuple | None = None
    name: str = "map"

    @classmethod
    def linear(cls, lattice: SpatialLattice, matrix, name: str = "linear") -> "SymplecticMap":
        mat = np.array(matrix, dtype=float)
        dim = 2 * lattice.site_count
        if mat.shape != (dim, dim):
            raise DimensionError(f"linear map must be {dim}x{dim}")
        mat.setflags(write=False)
        comps = tuple(PolynomialObservable.linear(row) for row in mat)
        return cls(lattice, lambda x: mat @ x, lambda x: mat, True, mat, comps, name)

    @classmethod
    def polynomial(cls, lattice: SpatialLattice, components: Sequence[PolynomialObservable], name: str = "polynomial") -> "SymplecticMap":
        comps = tuple(components)
        if len(comps) != 2 * lattice.site_count:
            raise DimensionError("need one component polynomial per phase coordinate")

        def apply(x):
            return np.array([c(x) for c in comps]).real

        def jac(x):
            return np.array([c.gradient(x) for c in comps]).real

        linear = all(c.degree <= 1 for c in comps) and all(
            sum(k) == 1 for c in comps for k in c.terms
        )
        mat = jac(np.zeros(2 * lattice.site_count)) if linear else None
        return cls(lattice, apply, jac, linear, mat, comps, name)

    @classmethod
    def from_function(cls, lattice: SpatialLattice, func: Callable, name: str = "function") -> "SymplecticMap":
        return cls(lattice, func, None, False, None, None, name)

    @classmethod
    def identity(cls, lattice: SpatialLattice) -> "SymplecticMap":
        return cls.linear(lattice, np.eye(2 * lattice.site_count), name="identity")

    @classmethod
    def shear(cls, lattice: SpatialLattice, epsilon: float, power: int = 3) -> "SymplecticMap":
        """Per-site shear ``(phi, pi) -> (phi, pi + epsilon phi^power)``."""
        n = lattice.site_count
        comps = []
        for k in range(2 * n):
            c = PolynomialObservable.variable(2 * n, k)
            if k >= n:
                c = c + PolynomialObservable.variable(2 * n, k - n) ** power * epsilon
            comps.append(c)
        return cls.polynomial(lattice, comps, name=f"shear{power}")

    def __call__(self, eta: PhaseVector) -> PhaseVector:
        return PhaseVector.from_coords(self.lattice, self.apply(eta.coords))

    def jacobian(self, x, h: float | None = None) -> np.ndarray:
        if self.derivative is not None:
            return np.asarray(self.derivative(np.asarray(x, dtype=float)), dtype=float)
        return fd_jacobian(self.apply, x, h)


@dataclass
class SymplecticReport:
    """Pullback residuals ``max |DU^T W DU - W|`` at each sample."""

    residuals: list
    tol: float
    max_residual: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.max_residual = float(max(self.residuals, default=0.0))
        self.passed = self.max_residual <= self.tol

    def to_dict(self) -> dict:
        return {"residuals": [float(r) for r in self.residuals], "tol": self.tol, "max_residual": self.max_residual, "passed": self.passed}


def pullback_residual(jac: np.ndarray, lattice: SpatialLattice) -> float:
    w = symplectic_matrix(lattice)
    return float(np.max(np.abs(jac.T @ w @ jac - w)))


def is_symplectomorphism(U: SymplecticMap, samples: Sequence[PhaseVector], tol: float = 1e-10) -> SymplecticReport:
    """Check ``DU^A_B DU^C_D Omega^BD = Omega^AC`` at each sample point."""
    res = [pullback_residual(U.jacobian(s.coords), U.lattice) for s in samples]
    return SymplecticReport(res, tol)


def check_linear(U: SymplecticMap, samples: Sequence[PhaseVector], tol: float = 1e-10) -> bool:
    """Sampled additivity and homogeneity of ``U``."""
    for a, b in zip(samples, samples[1:]):
        x, y = a.coords, b.coords
        lhs = U.apply(2.5 * x - y)
        rhs = 2.5 * U.apply(x) - U.apply(y)
        if np.max(np.abs(lhs - rhs)) > tol * (1 + np.max(np.abs(rhs))):
            return False
    return True


def validate_symplectic_matrix(S: np.ndarray, lattice: SpatialLattice, tol: float = 1e-10) -> None:
    res = pullback_residual(np.asarray(S, dtype=float), lattice)
    if res > tol:
        raise ValidationError(f"matrix is not symplectic (pullback residual {res:.3e})")
