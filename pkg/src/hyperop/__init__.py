"""Finite-dimensional operator theory over the quaternions and octonions."""

__version__ = "0.1.0"
