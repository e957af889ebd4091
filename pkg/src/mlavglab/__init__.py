"""Numerical laboratory for multilinear averages over curved surfaces."""

__version__ = "0.1.0"
