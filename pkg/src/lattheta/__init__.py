"""Lattice theta functions: certified sums, layered stackings, BCO families."""

__version__ = "0.1.0"
