"""Spectral analysis of Kirchhoff Laplacians on radial metric trees."""

__version__ = "0.1.0"
