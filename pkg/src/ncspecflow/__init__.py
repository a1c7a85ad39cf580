"""Numerical noncommutative spectral flow over matrix and loop algebras."""

__version__ = "0.1.0"
