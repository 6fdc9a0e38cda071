"""Numerical checks for ideal membership in H-infinity on the unit disc."""

__version__ = "0.1.0"
