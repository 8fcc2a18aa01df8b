"""Shared exception hierarchy.

Every structured failure in the pipeline raises a subclass of GeoVulnError so
callers (CLI, server) can distinguish data errors from programming errors.
"""


class GeoVulnError(Exception):
    """Base class for all pipeline errors."""


class GeometryError(GeoVulnError):
    """Invalid or degenerate geometry."""


class ShapefileError(GeoVulnError):
    """Malformed SHP/SHX/DBF input."""


class ProjectionError(GeoVulnError):
    """Coordinate outside a projection domain, or unknown CRS pair."""


class GeoJsonError(GeoVulnError):
    """GeoJSON read/write failure."""


class RasterError(GeoVulnError):
    """Malformed or unsupported TIFF input, or out-of-extent window."""


class TabularError(GeoVulnError):
    """CSV normalization or consolidation failure."""


class StateError(GeoVulnError):
    """Invalid shareable application state or token."""
