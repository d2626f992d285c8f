"""Spectral wave evolution on metric cones and numerical checks of its dispersive estimates."""

__version__ = "0.1.0"
