"""Weak Galerkin solver for the 2D Poisson problem on polygonal meshes,
robust to arbitrarily short edges."""

__version__ = "0.1.0"
