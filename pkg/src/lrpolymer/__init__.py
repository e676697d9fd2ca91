"""Directed polymers in time-correlated Gaussian environments and their continuum limits."""

__version__ = "0.1.0"
