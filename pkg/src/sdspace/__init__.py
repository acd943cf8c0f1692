"""Numerical realization of Jones strong-distribution spaces SD^p on finite sections."""

__version__ = "0.1.0"
