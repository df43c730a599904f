"""Numerical laboratory for quantum rewinding in zero-knowledge protocols."""

__version__ = "0.1.0"
