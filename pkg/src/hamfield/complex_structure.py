"""Symplectic-compatible complex structures.

Two constructions are provided for a generator ``Hhat`` whose Hamiltonian
form is positive definite:

* the polar route, ``J = Hhat / |Hhat|`` with ``|Hhat| = sqrt(Hhat^dag Hhat)``
  and the adjoint taken in the energy inner product ``<x, y>_H = x^T H y``
  (where ``Hhat`` is anti-self-adjoint, so ``|Hhat|^2 = -Hhat^2``);
* the positive-frequency route, which projects the complexified phase space
  onto the eigenspace of ``Hhat`` on which ``-i Omega(conj(xi), xi)`` is
  positive and reads ``J`` off the projector ``P = (1 - iJ) / 2``.

Both are computed in the frame ``H^{1/2}`` where ``Hhat`` becomes a real
antisymmetric matrix, so standard symmetric/Hermitian eigensolvers apply.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, DimensionError, ValidationError
from .lattice import SpatialLattice
from .linear_dynamics import GeneratorOperator, QuadraticHamiltonian, build_generator
from .symplectic import PhaseVector, omega, symplectic_matrix

J_TOL = 1e-12
DEGENERACY_TOL = 1e-10


@dataclass
class CompatibilityReport:
    """Per-condition residuals for a candidate complex structure."""

    square_residual: float
    symplectic_residual: float
    positivity_min_eigenvalue: float
    tol: float = J_TOL
    conditions: dict = field(init=False)

    def __post_init__(self):
        self.conditions = {
            "complex_structure": self.square_residual <= self.tol,
            "symplectic": self.symplectic_residual <= self.tol,
            "positivity": self.positivity_min_eigenvalue >= -self.tol,
        }

    @property
    def passed(self) -> bool:
        return all(self.conditions.values())

    @property
    def failed(self) -> list:
        return [k for k, ok in self.conditions.items() if not ok]

    def to_dict(self) -> dict:
        return {
            "square_residual": self.square_residual,
            "symplectic_residual": self.symplectic_residual,
            "positivity_min_eigenvalue": self.positivity_min_eigenvalue,
            "tol": self.tol,
            "conditions": dict(self.conditions),
            "passed": self.passed,
        }


def check_compatibility(J, lattice: SpatialLattice, tol: float = J_TOL) -> CompatibilityReport:
    """Check ``J^2 = -1``, ``J in Sp(Phi, Omega)`` and ``Omega(J eta, eta) >= 0``."""
    J = np.asarray(J, dtype=float)
    dim = 2 * lattice.site_count
    if J.shape != (dim, dim):
        raise DimensionError(f"candidate must be {dim}x{dim}, got {J.shape}")
    w = symplectic_matrix(lattice)
    sq = float(np.max(np.abs(J @ J + np.eye(dim))))
    sym = float(np.max(np.abs(J.T @ w @ J - w)))
    form = J.T @ w
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (form + form.T))))
    return CompatibilityReport(sq, sym, min_eig, tol)


@dataclass(frozen=True, eq=False)
class ComplexStructure:
    """A validated symplectic-compatible complex structure."""

    lattice: SpatialLattice
    matrix: np.ndarray
    tol: float = J_TOL

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        report = check_compatibility(m, self.lattice, self.tol)
        if not report.passed:
            raise ValidationError(f"not a compatible complex structure; failed: {', '.join(report.failed)}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def standard(cls, lattice: SpatialLattice) -> "ComplexStructure":
        """``J0 (phi, pi) = (pi, -phi)`` on every site."""
        n = lattice.site_count
        z, e = np.zeros((n, n)), np.eye(n)
        return cls(lattice, np.block([[z, e], [-e, z]]))

    def report(self) -> CompatibilityReport:
        return check_compatibility(self.matrix, self.lattice, self.tol)

    def __call__(self, eta: PhaseVector) -> PhaseVector:
        return PhaseVector.from_coords(self.lattice, self.matrix @ eta.coords)

    def metric(self) -> np.ndarray:
        """Symmetric real part of the induced product: ``Re<x, y> = x^T (J^T W) y``."""
        return self.matrix.T @ symplectic_matrix(self.lattice)

    def inner(self, x: np.ndarray, y: np.ndarray) -> complex:
        """Induced product on flat coordinates (antilinear in ``x``)."""
        w = symplectic_matrix(self.lattice)
        return complex(x @ self.metric() @ y - 1j * (x @ w @ y))


def induced_inner_product(J: ComplexStructure, eta: PhaseVector, eta2: PhaseVector) -> complex:
    """``<eta, eta'> = Omega(J eta, eta') - i Omega(eta, eta')``."""
    return complex(omega(J(eta), eta2) - 1j * omega(eta, eta2))


def complex_scale(J: ComplexStructure, z: complex, eta: PhaseVector) -> PhaseVector:
    """Scalar multiplication ``(a + ib) eta = a eta + b J eta``."""
    return eta * z.real + J(eta) * z.imag


# construction helpers


def _as_generator(source) -> GeneratorOperator:
    if isinstance(source, QuadraticHamiltonian):
        return build_generator(source)
    if isinstance(source, GeneratorOperator):
        return source
    raise TypeError("expected a GeneratorOperator or QuadraticHamiltonian")


def _energy_frame(gen: GeneratorOperator):
    """Return ``(H^{1/2}, H^{-1/2}, A)`` with ``A = H^{1/2} Hhat H^{-1/2}`` antisymmetric."""
    h = gen.form_matrix()
    h = 0.5 * (h + h.T)
    evals, vecs = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(evals))))
    lowest = int(np.argmin(evals))
    if evals[lowest] <= 1e-10 * scale:
        raise ConstructionError(
            f"Hamiltonian form has eigenvalue {evals[lowest]:.6g}; a compatible complex structure "
            "requires the Hamiltonian form H_AB to be positive definite (the reading of "
            "'Hhat positive definite and invertible' used here)"
        )
    root = np.sqrt(evals)
    hs = (vecs * root) @ vecs.T
    hs_inv = (vecs / root) @ vecs.T
    a = hs @ gen.matrix @ hs_inv
    a = 0.5 * (a - a.T)
    return hs, hs_inv, a


def _group_degenerate(values: np.ndarray, tol: float = DEGENERACY_TOL) -> np.ndarray:
    """Replace clusters of nearly equal sorted eigenvalues by their mean."""
    out = values.copy()
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > tol * max(1.0, abs(values[k])):
            out[start:k] = values[start:k].mean()
            start = k
    return out


def polar_complex_structure(source) -> ComplexStructure:
    """``J = Hhat / |Hhat|`` for a generator with positive definite Hamiltonian form."""
    gen = _as_generator(source)
    hs, hs_inv, a = _energy_frame(gen)
    b = a.T @ a
    evals, vecs = np.linalg.eigh(0.5 * (b + b.T))
    evals = _group_degenerate(evals)
    if evals[0] <= 1e-14 * max(1.0, evals[-1]):
        raise ConstructionError(f"generator is singular (|Hhat|^2 eigenvalue {evals[0]:.3e})")
    inv_abs = (vecs / np.sqrt(evals)) @ vecs.T
    j = hs_inv @ (a @ inv_abs) @ hs
    return ComplexStructure(gen.lattice, j)


@dataclass(frozen=True, eq=False)
class ComplexificationSplit:
    """Projector onto the positive subspace of the complexified phase space.

    ``P`` acts on complex phase coordinates; :meth:`block` gives the same
    projector on the doubled real space ``Phi x Phi`` in the block form
    ``1/2 [[1, J], [-J, 1]]``.
    """

    lattice: SpatialLattice
    projector: np.ndarray
    jtilde: ComplexStructure
    basis: np.ndarray

    def block(self) -> np.ndarray:
        j = self.jtilde.matrix
        e = np.eye(j.shape[0])
        return 0.5 * np.block([[e, j], [-j, e]])

    def hermitian_form(self, xi: np.ndarray, xi2: np.ndarray) -> complex:
        """``<xi, xi'> = -i Omega^C(conj(xi), xi')`` on complex coordinates."""
        w = symplectic_matrix(self.lattice)
        return complex(-1j * (np.conj(xi) @ w @ xi2))

    def inner(self, eta: PhaseVector, eta2: PhaseVector) -> complex:
        """``2 <P eta, P eta'>``."""
        p = self.projector
        return 2 * self.hermitian_form(p @ eta.coords, p @ eta2.coords)

    def subspace_conditions(self) -> dict:
        """Residuals for positivity on the subspace, orthogonality to its conjugate, and the direct-sum split."""
        w = symplectic_matrix(self.lattice)
        v = self.basis
        gram = -1j * (np.conj(v).T @ w @ v)
        cross = -1j * (v.T @ w @ v)
        rank = np.linalg.matrix_rank(np.hstack([v, np.conj(v)]))
        return {
            "positive_min_eigenvalue": float(np.min(np.linalg.eigvalsh(0.5 * (gram + gram.conj().T)))),
            "orthogonality_residual": float(np.max(np.abs(cross))) if cross.size else 0.0,
            "direct_sum_rank": int(rank),
            "phase_dimension": int(2 * self.lattice.site_count),
        }


def positive_frequency_split(source) -> ComplexificationSplit:
    """Build the projector onto the positive eigenspace of ``Hhat`` and extract ``J``."""
    gen = _as_generator(source)
    hs, hs_inv, a = _energy_frame(gen)
    herm = 1j * a
    evals, vecs = np.linalg.eigh(0.5 * (herm + herm.conj().T))
    scale = max(1.0, float(np.max(np.abs(evals))))
    if np.min(np.abs(evals)) <= 1e-14 * scale:
        raise ConstructionError("generator has a zero mode; no positive-frequency split exists")
    # Hhat v = i w v with w > 0  <=>  (i A) u = -w u in the energy frame
    sel = vecs[:, evals < 0]
    q = sel @ sel.conj().T
    p = hs_inv @ q @ hs
    jt = 1j * (2 * p - np.eye(p.shape[0]))
    if np.max(np.abs(jt.imag)) > 1e-9 * max(1.0, float(np.max(np.abs(jt.real)))):
        raise ConstructionError("extracted complex structure is not real")
    return ComplexificationSplit(gen.lattice, p, ComplexStructure(gen.lattice, jt.real), hs_inv @ sel)


def complex_dimension(J: ComplexStructure) -> int:
    """Complex dimension of phase space under ``J`` (rank of the ``+i`` eigenspace)."""
    p = 0.5 * (np.eye(J.matrix.shape[0]) - 1j * J.matrix)
    return int(np.linalg.matrix_rank(p))


def mode_map(J: ComplexStructure) -> np.ndarray:
    """Complex ``d x 2d`` matrix ``M`` carrying ``(Phi, J)`` onto orthonormal mode coordinates.

    ``conj(M x) . (M y) = <x, y>_J`` and ``M J = i M``, so ``M`` is the unitary
    identification of the one-particle space with ``C^d`` used by the Fock layer.
    """
    n2 = J.matrix.shape[0]
    p = 0.5 * (np.eye(n2) - 1j * J.matrix)
    w = symplectic_matrix(J.lattice)
    k = -0.5j * (np.conj(p).T @ w @ p)
    k = 0.5 * (k + k.conj().T)
    evals, vecs = np.linalg.eigh(k)
    keep = evals > 1e-12 * max(1.0, float(np.max(evals)))
    return 2 * (np.sqrt(evals[keep])[:, None] * vecs[:, keep].conj().T)
