"""Jet-bundle calculus for differential invariants of Lagrangian densities."""

__version__ = "0.1.0"
