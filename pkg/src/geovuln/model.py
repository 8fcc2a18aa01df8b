"""Core geometry and feature data model shared by all pipeline stages.

Coordinates are (x, y) tuples of 64-bit floats end to end; precision
reduction is an explicit pipeline step, never implicit storage truncation.
All types are immutable values after construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import GeometryError

Coord = tuple[float, float]
Scalar = Union[str, float, int, bool, None]

GEOMETRY_KINDS = ("Point", "MultiPoint", "LineString", "Polygon", "MultiPolygon")


@dataclass(frozen=True)
class BBox:
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self) -> None:
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise GeometryError("invalid bbox: min exceeds max")

    def intersects(self, other: "BBox") -> bool:
        return not (
            self.max_x < other.min_x
            or other.max_x < self.min_x
            or self.max_y < other.min_y
            or other.max_y < self.min_y
        )

    def union(self, other: "BBox") -> "BBox":
        return BBox(
            min(self.min_x, other.min_x),
            min(self.min_y, other.min_y),
            max(self.max_x, other.max_x),
            max(self.max_y, other.max_y),
        )

    def contains_point(self, x: float, y: float) -> bool:
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y


@dataclass(frozen=True)
class Geometry:
    """A geometry of one of the five supported kinds.

    ``coords`` nesting mirrors GeoJSON:
      Point        -> (x, y)
      MultiPoint   -> ((x, y), ...)
      LineString   -> ((x, y), ...)
      Polygon      -> (ring, ...) where ring = ((x, y), ...)
      MultiPolygon -> (polygon, ...)
    """

    kind: str
    coords: tuple

    def __post_init__(self) -> None:
        validate_geometry(self)


@dataclass(frozen=True)
class Feature:
    geometry: Geometry
    attributes: dict[str, Scalar] = field(default_factory=dict)
    id: str | None = None


@dataclass(frozen=True)
class FeatureCollection:
    crs: int
    features: tuple[Feature, ...] = ()


def point(x: float, y: float) -> Geometry:
    return Geometry("Point", (float(x), float(y)))


def multipoint(pts) -> Geometry:
    return Geometry("MultiPoint", tuple((float(x), float(y)) for x, y in pts))


def linestring(pts) -> Geometry:
    return Geometry("LineString", tuple((float(x), float(y)) for x, y in pts))


def polygon(rings) -> Geometry:
    return Geometry(
        "Polygon", tuple(tuple((float(x), float(y)) for x, y in r) for r in rings)
    )


def multipolygon(polys) -> Geometry:
    return Geometry(
        "MultiPolygon",
        tuple(
            tuple(tuple((float(x), float(y)) for x, y in r) for r in p) for p in polys
        ),
    )


def _check_coord(c) -> None:
    if (
        not isinstance(c, tuple)
        or len(c) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in c)
    ):
        raise GeometryError(f"invalid coordinate {c!r}")
    if not (math.isfinite(c[0]) and math.isfinite(c[1])):
        raise GeometryError("non-finite coordinate")


def _check_ring(ring) -> None:
    if len(ring) < 4:
        raise GeometryError("polygon ring has fewer than 4 coordinates")
    for c in ring:
        _check_coord(c)
    if ring[0] != ring[-1]:
        raise GeometryError("polygon ring is not closed")


def validate_geometry(g: Geometry) -> None:
    if g.kind == "Point":
        _check_coord(g.coords)
    elif g.kind == "MultiPoint":
        if len(g.coords) < 1:
            raise GeometryError("empty geometry")
        for c in g.coords:
            _check_coord(c)
    elif g.kind == "LineString":
        if len(g.coords) < 2:
            raise GeometryError("LineString has fewer than 2 coordinates")
        for c in g.coords:
            _check_coord(c)
    elif g.kind == "Polygon":
        if len(g.coords) < 1:
            raise GeometryError("empty geometry")
        for ring in g.coords:
            _check_ring(ring)
    elif g.kind == "MultiPolygon":
        if len(g.coords) < 1:
            raise GeometryError("empty geometry")
        for poly in g.coords:
            if len(poly) < 1:
                raise GeometryError("empty polygon in MultiPolygon")
            for ring in poly:
                _check_ring(ring)
    else:
        raise GeometryError(f"unknown geometry kind {g.kind!r}")


def iter_coords(g: Geometry) -> Iterator[Coord]:
    """Yield every coordinate of g, counting ring closure points."""
    if g.kind == "Point":
        yield g.coords
    elif g.kind in ("MultiPoint", "LineString"):
        yield from g.coords
    elif g.kind == "Polygon":
        for ring in g.coords:
            yield from ring
    elif g.kind == "MultiPolygon":
        for poly in g.coords:
            for ring in poly:
                yield from ring


def map_coords(g: Geometry, fn) -> Geometry:
    """Rebuild g with fn applied to every (x, y) coordinate."""
    if g.kind == "Point":
        return Geometry("Point", fn(g.coords))
    if g.kind in ("MultiPoint", "LineString"):
        return Geometry(g.kind, tuple(fn(c) for c in g.coords))
    if g.kind == "Polygon":
        return Geometry("Polygon", tuple(tuple(fn(c) for c in ring) for ring in g.coords))
    return Geometry(
        "MultiPolygon",
        tuple(tuple(tuple(fn(c) for c in ring) for ring in poly) for poly in g.coords),
    )


def bbox_of(g: Geometry) -> BBox:
    """Tight axis-aligned envelope of all coordinates of g."""
    it = iter_coords(g)
    try:
        x0, y0 = next(it)
    except StopIteration:
        raise GeometryError("empty geometry") from None
    min_x = max_x = x0
    min_y = max_y = y0
    for x, y in it:
        if x < min_x:
            min_x = x
        elif x > max_x:
            max_x = x
        if y < min_y:
            min_y = y
        elif y > max_y:
            max_y = y
    return BBox(min_x, min_y, max_x, max_y)


def vertex_count(g: Geometry) -> int:
    """Total coordinate count across all parts, counting ring closures."""
    return sum(1 for _ in iter_coords(g))


def collection_bbox(fc: FeatureCollection) -> BBox | None:
    box: BBox | None = None
    for f in fc.features:
        b = bbox_of(f.geometry)
        box = b if box is None else box.union(b)
    return box
