"""Truncated bosonic Fock space in occupation-number coordinates.

Basis states are occupation multi-indices ``(n_1..n_d)`` with total particle
number at most ``n_max``, ordered by total number and then lexicographically
(largest first occupation first).  Truncating by total number keeps every
number-conserving operator exact below the cutoff; ladder operators lose only
the transition out of the top sector.

Mode vectors are complex ``d``-vectors in an orthonormal mode basis.  Their
inner product ``<eta, psi> = sum conj(eta_k) psi_k`` is antilinear in the
first slot, ``a_eta`` is antilinear in ``eta`` and ``a^dag_eta`` linear.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .errors import DimensionError, ValidationError
from .lattice import SpatialLattice

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class FockSpace:
    """Occupation basis for ``d`` modes with total-particle cutoff ``n_max``."""

    def __init__(self, d: int, n_max: int):
        if d < 1 or n_max < 0:
            raise ValidationError(f"need d >= 1 and n_max >= 0, got d={d}, n_max={n_max}")
        self.d = int(d)
        self.n_max = int(n_max)
        self.basis = [occ for total in range(self.n_max + 1) for occ in _compositions(total, self.d)]
        self.index = {occ: i for i, occ in enumerate(self.basis)}
        self.totals = np.array([sum(occ) for occ in self.basis])
        if len(self.basis) != comb(self.d + self.n_max, self.n_max):
            raise AssertionError("basis size mismatch")

    def __repr__(self):
        return f"FockSpace(d={self.d}, n_max={self.n_max})"

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __eq__(self, other):
        return isinstance(other, FockSpace) and (self.d, self.n_max) == (other.d, other.n_max)

    def __hash__(self):
        return hash((self.d, self.n_max))

    @cached_property
    def _annihilators(self) -> list:
        ops = []
        for k in range(self.d):
            rows, cols, vals = [], [], []
            for j, occ in enumerate(self.basis):
                if occ[k]:
                    lower = occ[:k] + (occ[k] - 1,) + occ[k + 1:]
                    rows.append(self.index[lower])
                    cols.append(j)
                    vals.append(np.sqrt(occ[k]))
            ops.append(sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex))
        return ops

    def mode_annihilator(self, k: int) -> sp.csr_matrix:
        return self._annihilators[k]

    def mode_creator(self, k: int) -> sp.csr_matrix:
        return self._annihilators[k].T.tocsr()

    def below(self, n: int) -> np.ndarray:
        """Indices of basis states with at most ``n`` particles."""
        return np.flatnonzero(self.totals <= n)

    def vacuum(self) -> "FockState":
        c = np.zeros(self.dim, dtype=complex)
        c[0] = 1.0
        return FockState(self, c)

    def basis_state(self, occupation) -> "FockState":
        occ = tuple(int(n) for n in occupation)
        if occ not in self.index:
            raise DimensionError(f"occupation {occ} not in {self}")
        c = np.zeros(self.dim, dtype=complex)
        c[self.index[occ]] = 1.0
        return FockState(self, c)

    def random_state(self, rng: np.random.Generator, max_particles: int | None = None) -> "FockState":
        c = rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)
        if max_particles is not None:
            c[self.totals > max_particles] = 0
        return FockState(self, c / np.linalg.norm(c))


@dataclass(frozen=True, eq=False)
class FockState:
    """Complex coefficients over a :class:`FockSpace` basis."""

    space: FockSpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (self.space.dim,):
            raise DimensionError(f"state has {c.size} coefficients, space has {self.space.dim}")
        object.__setattr__(self, "coefficients", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm - 1.0) <= 1e-10

    def inner(self, other: "FockState") -> complex:
        return complex(np.vdot(self.coefficients, other.coefficients))

    def sector(self, n: int) -> np.ndarray:
        return self.coefficients[self.space.totals == n]

    def expect(self, op) -> complex:
        return complex(np.vdot(self.coefficients, op @ self.coefficients))


def _mode_vector(space: FockSpace, eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=complex)
    if eta.shape != (space.d,):
        raise DimensionError(f"mode vector needs {space.d} components, got shape {eta.shape}")
    return eta


def mode_inner(eta, psi) -> complex:
    return complex(np.vdot(eta, psi))


def mode_omega(eta, psi) -> float:
    """Symplectic form on mode space entering the Weyl relation: ``Im <eta, psi>``."""
    return float(np.imag(np.vdot(eta, psi)))


def annihilation_operator(space: FockSpace, eta, basis=None) -> sp.csr_matrix:
    """``a_eta = sum_k conj(eta_k) a_k``; ``basis`` expresses ``eta`` in other orthonormal modes.

    With ``basis`` (a unitary whose columns are mode functions), ``eta`` holds
    components along those columns and the operator is assembled from the
    rotated ladder operators ``a_(b_mu) = sum_k conj(B_k,mu) a_k``.
    """
    eta = _mode_vector(space, eta)
    if basis is None:
        op = sp.csr_matrix((space.dim, space.dim), dtype=complex)
        for k in range(space.d):
            if eta[k] != 0:
                op = op + np.conj(eta[k]) * space.mode_annihilator(k)
        return op
    b = np.asarray(basis, dtype=complex)
    rotated = [sum(np.conj(b[k, mu]) * space.mode_annihilator(k) for k in range(space.d)) for mu in range(space.d)]
    op = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for mu in range(space.d):
        op = op + np.conj(eta[mu]) * rotated[mu]
    return op


def creation_operator(space: FockSpace, eta, basis=None) -> sp.csr_matrix:
    """``a^dag_eta``, the truncated adjoint of :func:`annihilation_operator`."""
    return annihilation_operator(space, eta, basis).conj().T.tocsr()


def annihilate(eta, psi: FockState) -> FockState:
    return FockState(psi.space, annihilation_operator(psi.space, eta) @ psi.coefficients)


def create(eta, psi: FockState) -> FockState:
    """Apply ``a^dag_eta``; amplitude pushed past the cutoff is dropped."""
    return FockState(psi.space, creation_operator(psi.space, eta) @ psi.coefficients)


def field_operator(space: FockSpace, basis=None) -> list:
    """Components ``psi^A = sum_mu eta_mu^A a^mu`` of the field operator."""
    if basis is None:
        return [space.mode_annihilator(k) for k in range(space.d)]
    b = np.asarray(basis, dtype=complex)
    rotated = [annihilation_operator(space, b[:, mu]) for mu in range(space.d)]
    return [sum(b[a, mu] * rotated[mu] for mu in range(space.d)) for a in range(space.d)]


def number_operator(space: FockSpace, eta) -> sp.csr_matrix:
    a = annihilation_operator(space, eta)
    return (a.conj().T @ a).tocsr()


def total_number(space: FockSpace) -> sp.csr_matrix:
    return sp.diags(space.totals.astype(complex)).tocsr()


def _check_hermitian(T, d: int, name: str = "T") -> np.ndarray:
    T = np.asarray(T, dtype=complex)
    if T.shape != (d, d):
        raise DimensionError(f"{name} must be {d}x{d}, got {T.shape}")
    res = float(np.max(np.abs(T - T.conj().T)))
    if res > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(T)))):
        raise ValidationError(f"{name} is not self-adjoint (residual {res:.3e})")
    return T


def total_T_operator(space: FockSpace, T) -> sp.csr_matrix:
    """``T_hat = sum a^dag_mu T_mu,nu a_nu`` (second-quantized one-body operator)."""
    T = _check_hermitian(T, space.d)
    occ = np.array(space.basis, dtype=float).reshape(space.dim, space.d)
    # diagonal terms straight from occupation numbers, so T = 1 gives N exactly
    op = sp.diags(occ @ np.diag(T)).astype(complex).tocsr()
    for mu in range(space.d):
        for nu in range(space.d):
            if mu != nu and T[mu, nu] != 0:
                op = op + T[mu, nu] * (space.mode_creator(mu) @ space.mode_annihilator(nu))
    return op.tocsr()


def density_operator(space: FockSpace, lattice: SpatialLattice, site: int) -> sp.csr_matrix:
    """``n(x) = a^dag_x a_x / mu_x`` with modes aligned to lattice sites."""
    if lattice.site_count != space.d:
        raise DimensionError(f"mode basis has {space.d} modes but lattice has {lattice.site_count} sites")
    a = space.mode_annihilator(site)
    return (a.T @ a / lattice.measure_weights[site]).tocsr()


def field_quadrature(space: FockSpace, eta) -> np.ndarray:
    """``phi(eta) = (a_eta + a^dag_eta) / sqrt 2`` as a dense Hermitian matrix."""
    a = annihilation_operator(space, eta).toarray()
    return (a + a.conj().T) / np.sqrt(2)


def weyl_operator(space: FockSpace, eta) -> np.ndarray:
    """``W(eta) = exp(i phi(eta))`` on the truncated space (exactly unitary there)."""
    phi = field_quadrature(space, eta)
    evals, vecs = np.linalg.eigh(phi)
    return (vecs * np.exp(1j * evals)) @ vecs.conj().T


def weyl_truncation_weight(space: FockSpace, eta, max_particles: int = 0) -> float:
    """Largest top-sector probability of ``W(eta)`` applied to low-particle basis states."""
    w = weyl_operator(space, eta)
    top = space.totals == space.n_max
    cols = space.below(max_particles)
    return float(np.max(np.sum(np.abs(w[np.ix_(top, cols)]) ** 2, axis=0)))


def vacuum_characteristic(space: FockSpace, eta) -> complex:
    """``<v, W(eta) v>``."""
    return complex(weyl_operator(space, eta)[0, 0])


def _check_unitary(U, d: int) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.shape != (d, d):
        raise DimensionError(f"U must be {d}x{d}, got {U.shape}")
    res = float(np.max(np.abs(U.conj().T @ U - np.eye(d))))
    if res > UNITARY_TOL:
        raise ValidationError(f"U is not unitary (residual {res:.3e})")
    return U


def second_quantize(space: FockSpace, U) -> np.ndarray:
    """``Gamma(U)``: ``U`` acting on every particle slot, identity on the vacuum.

    Built column by column from ``Gamma(U)|n> = C_k Gamma(U)|n - e_k> / sqrt(n_k)``
    with ``C_k = a^dag_(U e_k)``; no matrix exponential is involved.
    """
    U = _check_unitary(U, space.d)
    creators = [creation_operator(space, U[:, k]) for k in range(space.d)]
    gamma = np.zeros((space.dim, space.dim), dtype=complex)
    gamma[0, 0] = 1.0
    for j, occ in enumerate(space.basis[1:], start=1):
        k = next(i for i, n in enumerate(occ) if n)
        lower = occ[:k] + (occ[k] - 1,) + occ[k + 1:]
        gamma[:, j] = creators[k] @ gamma[:, space.index[lower]] / np.sqrt(occ[k])
    return gamma


def second_quantize_generator(space: FockSpace, A) -> sp.csr_matrix:
    """``dGamma(A)``, the generator of ``Gamma(exp(itA))``."""
    return total_T_operator(space, A)


def fock_hamiltonian(space: FockSpace, H) -> sp.csr_matrix:
    """``H_F = sum a^dag_mu H_mu,nu a_nu``."""
    return total_T_operator(space, _check_hermitian(H, space.d, "H"))


def evolve_quantum(H_F, psi0: FockState, t: float) -> FockState:
    """``exp(-i H_F t) psi0`` via the Hermitian eigendecomposition."""
    h = H_F.toarray() if sp.issparse(H_F) else np.asarray(H_F)
    evals, vecs = np.linalg.eigh(0.5 * (h + h.conj().T))
    coeffs = vecs @ (np.exp(-1j * evals * t) * (vecs.conj().T @ psi0.coefficients))
    return FockState(psi0.space, coeffs)


# diagnostics


def _restricted_norm(op, cols: np.ndarray) -> float:
    m = op.toarray() if sp.issparse(op) else np.asarray(op)
    sub = m[:, cols]
    return float(np.linalg.norm(sub, 2)) if sub.size else 0.0


def ccr_residuals(space: FockSpace, eta, psi) -> dict:
    """Commutator residuals of the ladder operators below the cutoff."""
    a_e, a_p = annihilation_operator(space, eta), annihilation_operator(space, psi)
    c_e, c_p = creation_operator(space, eta), creation_operator(space, psi)
    eye = sp.identity(space.dim, dtype=complex, format="csr")
    return {
        "[a,a]": _restricted_norm(a_e @ a_p - a_p @ a_e, space.below(space.n_max)),
        "[a+,a+]": _restricted_norm(c_e @ c_p - c_p @ c_e, space.below(space.n_max - 2)),
        "[a,a+]": _restricted_norm(a_e @ c_p - c_p @ a_e - mode_inner(eta, psi) * eye, space.below(space.n_max - 1)),
    }


def weyl_relation_residual(space: FockSpace, eta, eta2, max_particles: int = 5) -> float:
    """``||(W(eta) W(eta') - exp(-i sigma / 2) W(eta + eta')) P_<=max_particles||``."""
    eta, eta2 = _mode_vector(space, eta), _mode_vector(space, eta2)
    lhs = weyl_operator(space, eta) @ weyl_operator(space, eta2)
    rhs = np.exp(-0.5j * mode_omega(eta, eta2)) * weyl_operator(space, eta + eta2)
    return _restricted_norm(lhs - rhs, space.below(max_particles))


def covariance_residual(space: FockSpace, U, eta, max_particles: int = 5) -> float:
    """``||(Gamma(U) W(eta) Gamma(U)^-1 - W(U eta)) P_<=max_particles||``."""
    g = second_quantize(space, U)
    lhs = g @ weyl_operator(space, eta) @ g.conj().T
    rhs = weyl_operator(space, np.asarray(U) @ np.asarray(eta, dtype=complex))
    return _restricted_norm(lhs - rhs, space.below(max_particles))


def dynamics_equivalence_residual(space: FockSpace, H, psi0: FockState, t: float) -> float:
    """``||exp(-i H_F t) psi0 - Gamma(exp(-i H t)) psi0||``."""
    H = _check_hermitian(H, space.d, "H")
    a = evolve_quantum(fock_hamiltonian(space, H), psi0, t).coefficients
    b = second_quantize(space, expm(-1j * H * t)) @ psi0.coefficients
    return float(np.linalg.norm(a - b))


def field_identity_residual(space: FockSpace, eta) -> float:
    """``max_A ||([psi^A, a^dag_eta] - eta^A 1) P_<=n_max-1||``."""
    eta = _mode_vector(space, eta)
    c = creation_operator(space, eta)
    eye = sp.identity(space.dim, dtype=complex, format="csr")
    cols = space.below(space.n_max - 1)
    return max(_restricted_norm(p @ c - c @ p - eta[a] * eye, cols) for a, p in enumerate(field_operator(space)))


def fock_dimension(d: int, n_max: int) -> int:
    return comb(d + n_max, n_max)
