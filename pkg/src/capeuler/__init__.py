"""Spectral toolkit for 2D free-boundary incompressible Euler flows with surface tension."""

__version__ = "0.1.0"
