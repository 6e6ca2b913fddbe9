"""Exact and numerical tools for noncommutative solvmanifolds built from real
quadratic fields: unit systems, lattice orbits, topology, twisted group
algebras, spectral series and Harper spectra.
"""

from .quadfield import FieldElement, UnitSystem, unit_system

__version__ = "0.1.0"

__all__ = ["FieldElement", "UnitSystem", "__version__", "unit_system"]
