"""Sparse multivariate polynomials over phase coordinates.

Coordinates are ordered ``(phi_1..phi_N, pi_1..pi_N)``.  Polynomials back the
analytic-gradient observables of the Poisson bracket and the terminating Moyal
star product.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError


class PolynomialObservable:
    """Finite map from exponent multi-indices to complex coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple, complex] | None = None):
        self.nvars = int(nvars)
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise DimensionError(f"exponent {exps} has wrong length for {self.nvars} variables")
            if c != 0:
                clean[exps] = clean.get(exps, 0) + complex(c)
        self.terms = {k: v for k, v in clean.items() if v != 0}

    @classmethod
    def constant(cls, nvars: int, value: complex) -> "PolynomialObservable":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, nvars: int, index: int, coeff: complex = 1.0) -> "PolynomialObservable":
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, {tuple(exps): coeff})

    @classmethod
    def linear(cls, coeffs: Sequence[complex]) -> "PolynomialObservable":
        """The linear form ``x -> sum_k coeffs[k] x_k``."""
        n = len(coeffs)
        return cls(n, {tuple(int(j == k) for j in range(n)): c for k, c in enumerate(coeffs)})

    @classmethod
    def random(cls, nvars: int, degree: int, rng: np.random.Generator, n_terms: int = 6) -> "PolynomialObservable":
        """Random real-coefficient polynomial with total degree at most ``degree``."""
        terms = {}
        for _ in range(n_terms):
            total = int(rng.integers(0, degree + 1))
            cuts = np.sort(rng.integers(0, total + 1, size=nvars - 1))
            exps = np.diff(np.concatenate([[0], cuts, [total]]))
            terms[tuple(int(e) for e in exps)] = float(rng.normal())
        return cls(nvars, terms)

    # algebra

    def _check(self, other: "PolynomialObservable") -> None:
        if self.nvars != other.nvars:
            raise DimensionError("polynomials over different coordinate counts")

    def __add__(self, other):
        if not isinstance(other, PolynomialObservable):
            other = PolynomialObservable.constant(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return PolynomialObservable(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return PolynomialObservable(self.nvars, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, PolynomialObservable) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PolynomialObservable):
            return PolynomialObservable(self.nvars, {k: v * other for k, v in self.terms.items()})
        self._check(other)
        out: dict = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0) + va * vb
        return PolynomialObservable(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        result = PolynomialObservable.constant(self.nvars, 1.0)
        for _ in range(int(n)):
            result = result * self
        return result

    def __repr__(self):
        return f"PolynomialObservable({self.nvars}, {self.terms})"

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def max_abs_coeff(self) -> float:
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def conj(self) -> "PolynomialObservable":
        return PolynomialObservable(self.nvars, {k: np.conj(v) for k, v in self.terms.items()})

    def derivative(self, index: int, order: int = 1) -> "PolynomialObservable":
        out = {}
        for k, v in self.terms.items():
            e = k[index]
            if e < order:
                continue
            factor = 1
            for j in range(order):
                factor *= e - j
            nk = list(k)
            nk[index] = e - order
            out[tuple(nk)] = v * factor
        return PolynomialObservable(self.nvars, out)

    def partial(self, multi_index: Sequence[int]) -> "PolynomialObservable":
        """Mixed partial derivative ``d^alpha`` for a multi-index ``alpha``."""
        out = {}
        for k, v in self.terms.items():
            factor = 1
            nk = []
            for e, a in zip(k, multi_index):
                if e < a:
                    factor = 0
                    break
                for j in range(a):
                    factor *= e - j
                nk.append(e - a)
            if factor:
                out[tuple(nk)] = v * factor
        return PolynomialObservable(self.nvars, out)

    # evaluation

    def __call__(self, x) -> complex:
        x = np.asarray(x)
        if x.shape != (self.nvars,):
            raise DimensionError(f"expected {self.nvars} coordinates, got shape {x.shape}")
        total = 0j
        for k, v in self.terms.items():
            total += v * np.prod(x ** np.asarray(k))
        return total

    def gradient(self, x) -> np.ndarray:
        return np.array([self.derivative(i)(x) for i in range(self.nvars)])

    def compose(self, components: Sequence["PolynomialObservable"]) -> "PolynomialObservable":
        """Substitute ``x_k -> components[k]``; the result is ``self o U``."""
        if len(components) != self.nvars:
            raise DimensionError("need one component polynomial per variable")
        nv = components[0].nvars
        powers: list[list[PolynomialObservable]] = [[PolynomialObservable.constant(nv, 1.0)] for _ in components]
        out = PolynomialObservable(nv)
        for k, v in self.terms.items():
            term = PolynomialObservable.constant(nv, v)
            for idx, e in enumerate(k):
                cache = powers[idx]
                while len(cache) <= e:
                    cache.append(cache[-1] * components[idx])
                if e:
                    term = term * cache[e]
            out = out + term
        return out

    def allclose(self, other: "PolynomialObservable", atol: float = 0.0) -> bool:
        return (self - other).max_abs_coeff() <= atol
