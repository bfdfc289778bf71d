"""Symbolic workbench for conservation laws of PDE systems.

Builds adjoint systems and Noether-operator fluxes from symmetry
generators, factors the total divergence into characteristic/adjoint and
multiplier (or recursion-operator) parts, and cross-checks every symbolic
zero with a seeded numeric oracle.
"""

from conslaw.jetspace import Context, IndependentVar, DependentVar, MultiIndex, JetCoordinate

__all__ = [
    "Context",
    "IndependentVar",
    "DependentVar",
    "MultiIndex",
    "JetCoordinate",
]

__version__ = "0.1.0"
