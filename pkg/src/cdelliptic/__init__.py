"""Cayley-Dickson arithmetic, CM lattices and octonionic elliptic lattice series."""

__version__ = "0.1.0"
