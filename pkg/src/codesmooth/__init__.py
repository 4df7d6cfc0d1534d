"""Exact computation of code smoothing over small binary (and small prime) spaces."""

__version__ = "0.1.0"
