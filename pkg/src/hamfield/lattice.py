"""Finite discretizations of the spatial manifold.

A :class:`SpatialLattice` carries positive measure weights per site and an
ordered partition of the sites into patches ``U_1, ..., U_K``.  Field
functions live on a lattice; the patch partition drives the Frechet metric of
the locally square-integrable space and the compact-support truncations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, ScalarTypeError, ValidationError


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpatialLattice:
    """Sites with measure weights and a patch partition.

    Parameters
    ----------
    site_count : int
        Number of sites.
    measure_weights : array_like, optional
        Per-site volume weights, all strictly positive.  Defaults to ones.
    patches : sequence of sequences of int, optional
        Disjoint groups of site indices covering every site exactly once.
        Defaults to a single patch holding all sites.
    """

    site_count: int
    measure_weights: np.ndarray = None
    patches: tuple = None

    def __post_init__(self):
        n = int(self.site_count)
        if n < 1:
            raise ValidationError(f"site_count must be positive, got {self.site_count}")
        object.__setattr__(self, "site_count", n)

        weights = np.ones(n) if self.measure_weights is None else np.asarray(self.measure_weights, dtype=float)
        if weights.shape != (n,):
            raise ValidationError(f"expected {n} measure weights, got shape {weights.shape}")
        if not np.all(weights > 0):
            raise ValidationError("every measure weight must be strictly positive")
        object.__setattr__(self, "measure_weights", _frozen(weights))

        patches = [tuple(range(n))] if self.patches is None else [tuple(int(i) for i in p) for p in self.patches]
        seen = [i for p in patches for i in p]
        if any(len(p) == 0 for p in patches):
            raise ValidationError("patches must be non-empty")
        if len(seen) != len(set(seen)):
            raise ValidationError("patches overlap")
        if sorted(seen) != list(range(n)):
            raise ValidationError("patches must cover every site exactly once")
        object.__setattr__(self, "patches", tuple(patches))

    @classmethod
    def uniform(cls, site_count: int, spacing: float = 1.0, patch_size: int | None = None) -> "SpatialLattice":
        """Equal weights ``spacing`` and contiguous patches of ``patch_size`` sites."""
        if patch_size is None:
            patches = None
        else:
            patches = [list(range(s, min(s + patch_size, site_count))) for s in range(0, site_count, patch_size)]
        return cls(site_count, np.full(site_count, float(spacing)), patches)

    @classmethod
    def from_dict(cls, doc: dict) -> "SpatialLattice":
        """Build from ``{"sites": N, "weights": [...], "patches": [[...], ...]}``."""
        try:
            n = int(doc["sites"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"lattice document needs an integer 'sites' entry: {exc}") from None
        weights = doc.get("weights")
        if weights is None:
            weights = [1.0] * n
        return cls(n, weights, doc.get("patches"))

    @classmethod
    def from_json(cls, source: str | Path) -> "SpatialLattice":
        """Load a lattice description from a JSON file path or a JSON string."""
        text = str(source)
        path = Path(text)
        if not text.lstrip().startswith("{") and path.exists():
            text = path.read_text()
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "sites": self.site_count,
            "weights": [float(w) for w in self.measure_weights],
            "patches": [list(p) for p in self.patches],
        }

    @property
    def patch_count(self) -> int:
        return len(self.patches)

    def same_as(self, other: "SpatialLattice") -> bool:
        return self is other or (
            self.site_count == other.site_count
            and np.array_equal(self.measure_weights, other.measure_weights)
            and self.patches == other.patches
        )

    def patch_mask(self, indices: Iterable[int]) -> np.ndarray:
        """Boolean site mask covering the 1-based patch indices given."""
        mask = np.zeros(self.site_count, dtype=bool)
        for n in indices:
            if not 1 <= n <= self.patch_count:
                raise ValidationError(f"patch index {n} outside 1..{self.patch_count}")
            mask[list(self.patches[n - 1])] = True
        return mask

    def zeros(self, complex_valued: bool = False) -> "FieldFunction":
        return FieldFunction(np.zeros(self.site_count, dtype=complex if complex_valued else float), self)

    def field(self, values: Sequence[complex]) -> "FieldFunction":
        return FieldFunction(values, self)

    def indicator(self, site: int, value: float = 1.0) -> "FieldFunction":
        v = np.zeros(self.site_count)
        v[site] = value
        return FieldFunction(v, self)


@dataclass(frozen=True, eq=False)
class FieldFunction:
    """Per-site scalar values on a lattice.

    The scalar type is fixed at construction: real inputs stay real, complex
    inputs stay complex, and arithmetic between the two raises
    :class:`~hamfield.errors.ScalarTypeError`.
    """

    values: np.ndarray
    lattice: SpatialLattice

    def __post_init__(self):
        vals = np.asarray(self.values)
        if np.iscomplexobj(vals):
            vals = vals.astype(complex)
        else:
            vals = vals.astype(float)
        if vals.shape != (self.lattice.site_count,):
            raise DimensionError(
                f"field has {vals.size} values but lattice has {self.lattice.site_count} sites"
            )
        object.__setattr__(self, "values", _frozen(vals))

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def _check(self, other: "FieldFunction") -> None:
        if not self.lattice.same_as(other.lattice):
            raise DimensionError("field functions live on different lattices")
        if self.is_complex != other.is_complex:
            raise ScalarTypeError("cannot mix real and complex field functions")

    def __add__(self, other: "FieldFunction") -> "FieldFunction":
        self._check(other)
        return FieldFunction(self.values + other.values, self.lattice)

    def __sub__(self, other: "FieldFunction") -> "FieldFunction":
        self._check(other)
        return FieldFunction(self.values - other.values, self.lattice)

    def __neg__(self) -> "FieldFunction":
        return FieldFunction(-self.values, self.lattice)

    def __mul__(self, scalar: float) -> "FieldFunction":
        if isinstance(scalar, complex) and not self.is_complex:
            raise ScalarTypeError("complex scalar applied to a real field function")
        return FieldFunction(self.values * scalar, self.lattice)

    __rmul__ = __mul__

    def patch_norm(self, n: int) -> float:
        """Weighted L2 norm restricted to the 1-based patch ``n``."""
        idx = list(self.lattice.patches[n - 1])
        w = self.lattice.measure_weights[idx]
        return float(np.sqrt(np.sum(w * np.abs(self.values[idx]) ** 2)))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.lattice.measure_weights * np.abs(self.values) ** 2)))


@dataclass(frozen=True, eq=False)
class CompactlySupportedFunction:
    """A field function known to vanish outside a finite set of patches."""

    base: FieldFunction
    support_patches: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        support = frozenset(int(n) for n in self.support_patches)
        object.__setattr__(self, "support_patches", support)
        lat = self.base.lattice
        outside = ~lat.patch_mask(support) if support else np.ones(lat.site_count, dtype=bool)
        if np.any(self.base.values[outside] != 0):
            raise ValidationError("values do not vanish outside the listed support patches")

    @classmethod
    def from_field(cls, f: FieldFunction) -> "CompactlySupportedFunction":
        """Wrap ``f`` with the smallest patch support that contains its nonzeros."""
        support = {
            n
            for n, patch in enumerate(f.lattice.patches, start=1)
            if np.any(f.values[list(patch)] != 0)
        }
        return cls(f, frozenset(support))

    @property
    def lattice(self) -> SpatialLattice:
        return self.base.lattice

    @property
    def values(self) -> np.ndarray:
        return self.base.values


def l2_inner(f: FieldFunction, g: FieldFunction) -> complex:
    """Weighted inner product ``sum_i mu_i conj(f_i) g_i``."""
    f._check(g)
    val = np.sum(f.lattice.measure_weights * np.conj(f.values) * g.values)
    return complex(val) if f.is_complex else float(val)


def frechet_metric(f: FieldFunction, g: FieldFunction) -> float:
    """Patchwise metric ``sum_n 2^-n r_n / (1 + r_n)`` with ``r_n = ||f - g||_n``.

    Patches are numbered from 1, so the value is bounded by ``1 - 2^-K``.
    """
    diff = f - g
    total = 0.0
    for n in range(1, f.lattice.patch_count + 1):
        r = diff.patch_norm(n)
        total += 0.5**n * r / (1.0 + r)
    return total


def dual_pair(psi: CompactlySupportedFunction, phi: FieldFunction) -> float:
    """Evaluate the compactly supported functional ``psi`` on ``phi``.

    This is the bilinear pairing ``sum_i mu_i psi_i phi_i`` (no conjugation).
    """
    base = psi.base if isinstance(psi, CompactlySupportedFunction) else psi
    if not base.lattice.same_as(phi.lattice):
        raise DimensionError("functional and field live on different lattices")
    val = np.sum(base.lattice.measure_weights * base.values * phi.values)
    return complex(val) if np.iscomplexobj(val) else float(val)


def truncate_to_patches(f: FieldFunction, k: int) -> CompactlySupportedFunction:
    """Restrict ``f`` to patches ``1..k``, zeroing everything else."""
    lat = f.lattice
    if not 1 <= k <= lat.patch_count:
        raise ValidationError(f"k must lie in 1..{lat.patch_count}, got {k}")
    mask = lat.patch_mask(range(1, k + 1))
    vals = np.where(mask, f.values, 0)
    return CompactlySupportedFunction(FieldFunction(vals.astype(f.values.dtype), lat), frozenset(range(1, k + 1)))


def tail_bound(lattice: SpatialLattice, k: int) -> float:
    """``sum_{n>k} 2^-n`` over the lattice's patches."""
    return float(sum(0.5**n for n in range(k + 1, lattice.patch_count + 1)))
