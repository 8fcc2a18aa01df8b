"""Geospatial hazard/vulnerability pipeline and layer server."""

__version__ = "0.1.0"
