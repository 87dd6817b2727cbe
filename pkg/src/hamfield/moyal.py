"""Weyl algebra, polynomial Moyal products and Gaussian states.

Elements of the Weyl algebra are finite sums ``sum alpha_j W(eta_j)`` of the
phase-space functions ``W(eta)(psi) = exp(i eta(psi))``.  Their star product
is exact bookkeeping of phases,

    W(eta) * W(eta') = exp(-i/2 Omega(eta, eta')) W(eta + eta'),

while for polynomials the Moyal series terminates and is summed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Iterable, Sequence

import numpy as np

from .complex_structure import ComplexStructure
from .errors import DimensionError, NonlinearMapError, ValidationError
from .lattice import SpatialLattice
from .polynomial import PolynomialObservable
from .symplectic import PhaseVector, SymplecticMap, pullback_residual, symplectic_matrix

KEY_DECIMALS = 12


def canonical_key(x) -> tuple:
    """Round dual-vector coordinates at 1e-12 so that equal sums merge."""
    return tuple(float(v) + 0.0 for v in np.round(np.asarray(x, dtype=float), KEY_DECIMALS))


class WeylElement:
    """Finite complex combination of Weyl generators over one lattice.

    ``terms`` maps the rounded :func:`canonical_key` of each dual vector to
    its coefficient; ``vectors`` keeps the unrounded vector first seen under
    that key, and every phase is computed from those unrounded vectors.
    """

    __slots__ = ("lattice", "terms", "vectors")

    def __init__(self, lattice: SpatialLattice, terms: dict | None = None):
        self.lattice = lattice
        self._fill((np.asarray(k, dtype=float), c) for k, c in (terms or {}).items())

    def _fill(self, pairs) -> None:
        dim = 2 * self.lattice.site_count
        coeffs: dict = {}
        vectors: dict = {}
        for vec, c in pairs:
            if vec.shape != (dim,):
                raise DimensionError(f"dual vector has {vec.size} coordinates, expected {dim}")
            k = canonical_key(vec)
            coeffs[k] = coeffs.get(k, 0) + complex(c)
            vectors.setdefault(k, vec)
        self.terms = {k: v for k, v in coeffs.items() if v != 0}
        self.vectors = {k: vectors[k] for k in self.terms}

    @classmethod
    def from_pairs(cls, lattice: SpatialLattice, pairs) -> "WeylElement":
        """Build from ``(vector, coefficient)`` pairs, merging equal keys."""
        out = cls(lattice)
        out._fill((np.asarray(v, dtype=float), c) for v, c in pairs)
        return out

    @classmethod
    def generator(cls, eta: PhaseVector, coeff: complex = 1.0) -> "WeylElement":
        return cls.from_pairs(eta.lattice, [(eta.coords, coeff)])

    @classmethod
    def from_coords(cls, lattice: SpatialLattice, x, coeff: complex = 1.0) -> "WeylElement":
        return cls.from_pairs(lattice, [(x, coeff)])

    @classmethod
    def unit(cls, lattice: SpatialLattice) -> "WeylElement":
        return cls.from_pairs(lattice, [(np.zeros(2 * lattice.site_count), 1.0)])

    @classmethod
    def random(cls, lattice: SpatialLattice, n_terms: int, rng: np.random.Generator, scale: float = 1.0) -> "WeylElement":
        dim = 2 * lattice.site_count
        return cls.from_pairs(lattice, [(scale * rng.normal(size=dim), complex(rng.normal(), rng.normal())) for _ in range(n_terms)])

    def __repr__(self):
        return f"WeylElement({len(self.terms)} terms)"

    def __len__(self):
        return len(self.terms)

    def _check(self, other: "WeylElement"):
        if not self.lattice.same_as(other.lattice):
            raise DimensionError("Weyl elements over different lattices")

    def pairs(self) -> Iterable[tuple[np.ndarray, complex]]:
        """``(vector, coefficient)`` for every term."""
        for k, v in self.terms.items():
            yield self.vectors[k], v

    def __add__(self, other: "WeylElement") -> "WeylElement":
        self._check(other)
        return WeylElement.from_pairs(self.lattice, list(self.pairs()) + list(other.pairs()))

    def __neg__(self):
        return WeylElement.from_pairs(self.lattice, [(k, -v) for k, v in self.pairs()])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar: complex) -> "WeylElement":
        return WeylElement.from_pairs(self.lattice, [(k, v * scalar) for k, v in self.pairs()])

    __rmul__ = __mul__

    def __matmul__(self, other: "WeylElement") -> "WeylElement":
        return weyl_star(self, other)

    def __call__(self, psi: PhaseVector) -> complex:
        """Evaluate as a phase-space function at ``psi``."""
        mu2 = np.concatenate([self.lattice.measure_weights] * 2)
        x = psi.coords
        return complex(sum(v * np.exp(1j * np.dot(mu2 * k, x)) for k, v in self.pairs()))


def difference(a: WeylElement, b: WeylElement, key_tol: float = 1e-9) -> float:
    """Largest coefficient gap between two elements.

    Keys closer than ``key_tol`` are treated as one generator, so two values
    that straddle a rounding boundary of :func:`canonical_key` still cancel.
    """
    a._check(b)
    items = list(a.pairs()) + [(k, -v) for k, v in b.pairs()]
    clusters: list = []
    for key, val in items:
        for c in clusters:
            if np.max(np.abs(c[0] - key)) <= key_tol:
                c[1] += val
                break
        else:
            clusters.append([key, val])
    return max((abs(c[1]) for c in clusters), default=0.0)


def weyl_star(a: WeylElement, b: WeylElement) -> WeylElement:
    """Bilinear extension of the Weyl-generator product."""
    a._check(b)
    w = symplectic_matrix(a.lattice)
    pairs = []
    for xa, va in a.pairs():
        row = xa @ w
        for xb, vb in b.pairs():
            pairs.append((xa + xb, va * vb * np.exp(-0.5j * float(row @ xb))))
    return WeylElement.from_pairs(a.lattice, pairs)


def weyl_involution(a: WeylElement) -> WeylElement:
    """Complex conjugation: conjugate coefficients, negate each ``eta``."""
    return WeylElement.from_pairs(a.lattice, [(-k, np.conj(v)) for k, v in a.pairs()])


def sup_norm_bounds(a: WeylElement, sample_count: int, rng: np.random.Generator | None = None, scale: float = 1.0) -> tuple:
    """Bracket the supremum norm of ``a`` as a phase-space function.

    The upper bound is the coefficient 1-norm; the lower bound is the largest
    sampled ``|a(psi)|``, with ``psi = 0`` always among the samples.
    """
    if sample_count < 1:
        raise ValidationError("sample_count must be at least 1")
    if not a.terms:
        return 0.0, 0.0
    rng = np.random.default_rng(0) if rng is None else rng
    upper = float(sum(abs(v) for v in a.terms.values()))
    dim = 2 * a.lattice.site_count
    keys = np.array([k for k, _ in a.pairs()])
    coeffs = np.array([v for _, v in a.pairs()])
    mu2 = np.concatenate([a.lattice.measure_weights] * 2)
    psis = np.vstack([np.zeros(dim), scale * rng.normal(size=(sample_count - 1, dim))])
    values = np.exp(1j * (psis @ (keys * mu2).T)) @ coeffs
    lower = float(np.max(np.abs(values)))
    return min(lower, upper), upper


# polynomial Moyal product


def _multi_indices(slots: int, max_total: int):
    if slots == 0:
        yield ()
        return
    for first in range(max_total + 1):
        for rest in _multi_indices(slots - 1, max_total - first):
            yield (first,) + rest


def moyal_star_poly(p: PolynomialObservable, q: PolynomialObservable, lattice: SpatialLattice) -> PolynomialObservable:
    """Terminating Moyal series ``p exp(i/2 Omega(<-grad, ->grad)) q``.

    The bidifferential operator is ``sum_i (1/mu_i)(d_phi_i x d_pi_i - d_pi_i x d_phi_i)``;
    its ``n``-th power is expanded multinomially so each term is one pair of
    mixed partials.
    """
    n = lattice.site_count
    if p.nvars != 2 * n or q.nvars != 2 * n:
        raise DimensionError("polynomials do not match the lattice's phase dimension")
    inv_mu = 1.0 / lattice.measure_weights
    # slot i < n: (d_phi_i on p, d_pi_i on q, +1/mu); slot n + i: (d_pi_i on p, d_phi_i on q, -1/mu)
    coef = np.concatenate([inv_mu, -inv_mu])
    order = min(p.degree, q.degree)
    out = PolynomialObservable(2 * n)
    for alpha in _multi_indices(2 * n, order):
        total = sum(alpha)
        left = tuple(alpha[:n]) + tuple(alpha[n:])
        dp = p.partial(left)
        if dp.is_zero():
            continue
        right = tuple(alpha[n:]) + tuple(alpha[:n])
        dq = q.partial(right)
        if dq.is_zero():
            continue
        weight = (0.5j) ** total
        for k, a_k in enumerate(alpha):
            if a_k:
                weight *= coef[k] ** a_k / factorial(a_k)
        out = out + (dp * dq) * weight
    return out


def star_commutator(p: PolynomialObservable, q: PolynomialObservable, lattice: SpatialLattice) -> PolynomialObservable:
    return moyal_star_poly(p, q, lattice) - moyal_star_poly(q, p, lattice)


def linear_observable(eta: PhaseVector) -> PolynomialObservable:
    """``eta_hat``: the linear function ``psi -> eta(psi)`` through the weighted pairing."""
    mu2 = np.concatenate([eta.lattice.measure_weights] * 2)
    return PolynomialObservable.linear(mu2 * eta.coords)


def compose(f: PolynomialObservable, U: SymplecticMap) -> PolynomialObservable:
    """``f o U`` for a map with polynomial components."""
    if U.components is None:
        raise ValidationError(f"map {U.name!r} has no polynomial components; composition would leave polynomials")
    return f.compose(U.components)


def star_covariance_residual(f: PolynomialObservable, g: PolynomialObservable, U: SymplecticMap) -> PolynomialObservable:
    """``(f o U) * (g o U) - (f * g) o U`` as an exact polynomial."""
    lat = U.lattice
    lhs = moyal_star_poly(compose(f, U), compose(g, U), lat)
    rhs = compose(moyal_star_poly(f, g, lat), U)
    return lhs - rhs


def covariance_sweep(U_list: Sequence[tuple], pairs: Sequence[tuple]) -> list:
    """Residual table rows over ``(map, epsilon)`` and ``(f, g)`` combinations."""
    rows = []
    for U, eps in U_list:
        for f, g in pairs:
            res = star_covariance_residual(f, g, U)
            rows.append(
                {
                    "f_degree": f.degree,
                    "g_degree": g.degree,
                    "map_name": U.name,
                    "epsilon": float(eps),
                    "residual_max": float(res.max_abs_coeff()),
                }
            )
    return rows


# automorphisms


def _require_linear_symplectic(U: SymplecticMap, tol: float = 1e-10) -> np.ndarray:
    if not U.is_linear or U.matrix is None:
        raise NonlinearMapError(
            f"map {U.name!r} is nonlinear: no automorphism of the Weyl algebra with "
            "Gamma(U) W(eta) = W(U eta) exists for nonlinear symplectomorphisms"
        )
    res = pullback_residual(U.matrix, U.lattice)
    if res > tol * max(1.0, float(np.max(np.abs(U.matrix))) ** 2):
        raise ValidationError(f"map {U.name!r} is not symplectic (pullback residual {res:.3e})")
    return U.matrix


def linear_automorphism(U: SymplecticMap, a: WeylElement) -> WeylElement:
    """``Gamma(U)(sum alpha W(eta)) = sum alpha W(U eta)``."""
    mat = _require_linear_symplectic(U)
    if not U.lattice.same_as(a.lattice):
        raise DimensionError("map and element over different lattices")
    return WeylElement.from_pairs(a.lattice, [(mat @ k, v) for k, v in a.pairs()])


# Gaussian states


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Quasi-free state ``E(W(eta)) = exp(i eta(mean) - 1/4 <eta, eta>_J)``."""

    mean: PhaseVector
    J: ComplexStructure

    def __post_init__(self):
        if not self.mean.lattice.same_as(self.J.lattice):
            raise DimensionError("mean and complex structure over different lattices")

    @classmethod
    def vacuum(cls, J: ComplexStructure) -> "GaussianState":
        return cls(PhaseVector.zero(J.lattice), J)

    @property
    def lattice(self) -> SpatialLattice:
        return self.J.lattice

    def characteristic(self, x) -> complex:
        """``E(W(eta))`` for dual-vector coordinates ``x`` (field-pair representation)."""
        x = np.asarray(x, dtype=float)
        mu2 = np.concatenate([self.lattice.measure_weights] * 2)
        q = float(x @ self.J.metric() @ x)
        return complex(np.exp(1j * np.dot(mu2 * x, self.mean.coords) - 0.25 * q))

    def covector_covariance(self) -> np.ndarray:
        """``Sigma`` with ``E = exp(i c.m - 1/2 c^T Sigma c)`` in covector coordinates ``c = mu * eta``."""
        mu2 = np.concatenate([self.lattice.measure_weights] * 2)
        g = self.J.metric()
        g = 0.5 * (g + g.T)
        return 0.5 * g / np.outer(mu2, mu2)

    def characteristic_covector(self, c) -> complex:
        mu2 = np.concatenate([self.lattice.measure_weights] * 2)
        return self.characteristic(np.asarray(c, dtype=float) / mu2)


def gaussian_expect(state: GaussianState, a: WeylElement) -> complex:
    """Linear extension of the characteristic functional."""
    if not state.lattice.same_as(a.lattice):
        raise DimensionError("state and element over different lattices")
    return complex(sum(v * state.characteristic(k) for k, v in a.pairs()))


def gram_matrix(state: GaussianState, generators: Sequence[WeylElement]) -> np.ndarray:
    """``G_ij = E(g_i^* * g_j)``; positive semidefinite for a positive state."""
    n = len(generators)
    g = np.empty((n, n), dtype=complex)
    for i, gi in enumerate(generators):
        gi_star = weyl_involution(gi)
        for j, gj in enumerate(generators):
            g[i, j] = gaussian_expect(state, weyl_star(gi_star, gj))
    return g


def _pair_partitions(items: tuple):
    """Partitions of ``items`` into blocks of size one or two."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _pair_partitions(rest):
        yield [(first,)] + part
    for k, other in enumerate(rest):
        remaining = rest[:k] + rest[k + 1:]
        for part in _pair_partitions(remaining):
            yield [(first, other)] + part


def n_point(state: GaussianState, n: int) -> np.ndarray:
    """``(-i)^n d^n E(W(eta)) / d c^n`` at ``eta = 0`` in covector coordinates.

    For a Gaussian functional this is the sum over partitions into singletons
    (mean) and pairs (covariance).
    """
    if n not in (1, 2, 3, 4):
        raise ValidationError(f"n-point order must be 1..4, got {n}")
    m = state.mean.coords
    cov = state.covector_covariance()
    dim = m.size
    out = np.zeros((dim,) * n)
    letters = "abcd"
    for part in _pair_partitions(tuple(range(n))):
        factors, subs = [], []
        for block in part:
            factors.append(m if len(block) == 1 else cov)
            subs.append("".join(letters[i] for i in block))
        out += np.einsum(",".join(subs) + "->" + letters[:n], *factors)
    return out
