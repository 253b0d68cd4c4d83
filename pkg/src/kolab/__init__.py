"""Numerical laboratory for derivative processes and Kolmogorov semigroups."""

__version__ = "0.1.0"
