"""Lattice field theory toolkit: symplectic phase space, complex structures,
truncated Fock space, Moyal products, phi^4 dynamics and covariant propagators."""

__version__ = "0.1.0"
