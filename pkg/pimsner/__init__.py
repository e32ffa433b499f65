"""Graph Cuntz-Pimsner algebras: Fock models, index pairings and integer K-theory."""

__version__ = "0.1.0"
