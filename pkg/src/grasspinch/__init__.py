"""Numerical verification of holomorphic pinching for submanifolds of complex Grassmannians."""

__version__ = "0.1.0"
