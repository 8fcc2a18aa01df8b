"""Geometry cost reduction: vertex elimination, precision quantization,
attribute pruning, tolerance sweep evaluation and the reduction report.

The vertex eliminator is Douglas-Peucker: its tolerance parameter *is* the
maximum allowable perpendicular deviation between original and simplified
geometry, so every dropped vertex stays within tolerance of the output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .errors import GeometryError
from .model import (
    Coord,
    Feature,
    FeatureCollection,
    Geometry,
    vertex_count,
)


@dataclass(frozen=True)
class SweepRow:
    tolerance: float
    vertex_count_after: int
    serialized_size_bytes: int
    max_deviation_observed: float


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]


@dataclass(frozen=True)
class ReductionRow:
    layer_name: str
    unfiltered: int
    filtered: int

    @property
    def percent_removed(self) -> float:
        return 100.0 * (self.unfiltered - self.filtered) / self.unfiltered


def _seg_distance(p: Coord, a: Coord, b: Coord) -> float:
    """Distance from p to segment a-b; falls back to point distance when a == b."""
    px, py = p
    ax, ay = a
    bx, by = b
    dx = bx - ax
    dy = by - ay
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg_len_sq
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _dp_mask(pts: list[Coord], tol: float) -> tuple[list[bool], float]:
    """Douglas-Peucker keep mask plus the max deviation among dropped points.

    A point survives iff its distance to the current chord strictly exceeds
    tol, so tol 0 drops only exactly-collinear points. Iterative stack to
    stay safe on 100k-vertex inputs.
    """
    n = len(pts)
    keep = [False] * n
    keep[0] = keep[-1] = True
    max_dev = 0.0
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        a = pts[i]
        b = pts[j]
        d_best = -1.0
        k_best = i
        for k in range(i + 1, j):
            d = _seg_distance(pts[k], a, b)
            if d > d_best:
                d_best = d
                k_best = k
        if d_best > tol:
            keep[k_best] = True
            stack.append((i, k_best))
            stack.append((k_best, j))
        elif d_best > max_dev:
            max_dev = d_best
    return keep, max_dev


def simplify_polyline(points, tol: float) -> list[Coord]:
    """Reduce a coordinate sequence, keeping endpoints, dropping every point
    within tol of the kept chord. Output is a subsequence of the input."""
    pts = list(points)
    if len(pts) < 2:
        raise GeometryError("degenerate polyline")
    if tol < 0:
        raise GeometryError("negative tolerance")
    keep, _ = _dp_mask(pts, tol)
    return [p for p, k in zip(pts, keep) if k]


def _ring_area(ring) -> float:
    area = 0.0
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        area += x1 * y2 - x2 * y1
    return area / 2.0


def _simplify_ring(ring, tol: float) -> tuple[tuple[Coord, ...], float]:
    """Simplify a closed ring anchored at its first vertex; keep the original
    ring when the result would degenerate (< 4 points or zero area)."""
    pts = list(ring)
    keep, dev = _dp_mask(pts, tol)
    out = [p for p, k in zip(pts, keep) if k]
    if out[0] != out[-1]:
        out.append(out[0])
    if len(out) < 4 or _ring_area(out) == 0.0:
        return tuple(pts), 0.0
    return tuple(out), dev


def simplify_geometry(g: Geometry, tol: float) -> Geometry:
    geom, _ = simplify_geometry_with_deviation(g, tol)
    return geom


def simplify_geometry_with_deviation(g: Geometry, tol: float) -> tuple[Geometry, float]:
    """Simplify g and report the max deviation among the dropped vertices."""
    if g.kind in ("Point", "MultiPoint"):
        return g, 0.0
    if g.kind == "LineString":
        pts = list(g.coords)
        keep, dev = _dp_mask(pts, tol)
        return Geometry("LineString", tuple(p for p, k in zip(pts, keep) if k)), dev
    if g.kind == "Polygon":
        rings = []
        dev = 0.0
        for ring in g.coords:
            out, d = _simplify_ring(ring, tol)
            rings.append(out)
            dev = max(dev, d)
        return Geometry("Polygon", tuple(rings)), dev
    polys = []
    dev = 0.0
    for poly in g.coords:
        rings = []
        for ring in poly:
            out, d = _simplify_ring(ring, tol)
            rings.append(out)
            dev = max(dev, d)
        polys.append(tuple(rings))
    return Geometry("MultiPolygon", tuple(polys)), dev


def round_half_away(value: float, decimals: int) -> float:
    """Round half away from zero at `decimals` places, reproducibly."""
    q = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def _collapse_consecutive(pts: list[Coord]) -> list[Coord]:
    out = [pts[0]]
    for p in pts[1:]:
        if p != out[-1]:
            out.append(p)
    return out


def quantize(g: Geometry, decimals: int) -> Geometry:
    geom, _ = quantize_counted(g, decimals)
    return geom


def quantize_counted(g: Geometry, decimals: int) -> tuple[Geometry, int]:
    """Round every coordinate half-away-from-zero and collapse consecutive
    duplicates. Parts that would degenerate keep their original coordinates;
    the count of such retentions is returned as warnings."""
    if not (0 <= decimals <= 15):
        raise GeometryError("decimals out of range")

    def rc(c: Coord) -> Coord:
        return (round_half_away(c[0], decimals), round_half_away(c[1], decimals))

    warnings = 0
    if g.kind == "Point":
        return Geometry("Point", rc(g.coords)), 0
    if g.kind == "MultiPoint":
        pts = _collapse_consecutive([rc(c) for c in g.coords])
        return Geometry("MultiPoint", tuple(pts)), 0
    if g.kind == "LineString":
        pts = _collapse_consecutive([rc(c) for c in g.coords])
        if len(pts) < 2:
            return g, 1
        return Geometry("LineString", tuple(pts)), 0

    def do_ring(ring) -> tuple[tuple[Coord, ...], int]:
        nonlocal warnings
        pts = _collapse_consecutive([rc(c) for c in ring])
        if pts[0] != pts[-1]:
            pts.append(pts[0])
        if len(pts) < 4:
            warnings += 1
            return tuple(ring), 0
        return tuple(pts), 0

    if g.kind == "Polygon":
        rings = tuple(do_ring(r)[0] for r in g.coords)
        return Geometry("Polygon", rings), warnings
    polys = tuple(tuple(do_ring(r)[0] for r in poly) for poly in g.coords)
    return Geometry("MultiPolygon", polys), warnings


def quantize_collection(fc: FeatureCollection, decimals: int) -> tuple[FeatureCollection, int]:
    warnings = 0
    features = []
    for f in fc.features:
        g, w = quantize_counted(f.geometry, decimals)
        warnings += w
        features.append(Feature(g, f.attributes, f.id))
    return FeatureCollection(fc.crs, tuple(features)), warnings


def prune_attributes(fc: FeatureCollection, keep: list[str]) -> FeatureCollection:
    """Retain exactly the named attributes, in keep order, on every feature."""
    schema: set[str] = set()
    for f in fc.features:
        schema.update(f.attributes)
    for name in keep:
        if name not in schema:
            raise GeometryError(f"attribute {name} not found")
    features = tuple(
        Feature(f.geometry, {k: f.attributes.get(k) for k in keep}, f.id)
        for f in fc.features
    )
    return FeatureCollection(fc.crs, features)


def tolerance_sweep(fc: FeatureCollection, tolerances) -> SweepReport:
    """Evaluate simplification at each tolerance: vertex counts, serialized
    size through the 5-decimal GeoJSON writer, and max observed deviation."""
    from .geojson import PrecisionPolicy, write_geojson

    tols = list(tolerances)
    if not tols:
        raise GeometryError("nothing to sweep")
    if any(t < 0 for t in tols) or tols != sorted(tols):
        raise GeometryError("tolerances must be sorted ascending and non-negative")
    rows = []
    for tol in tols:
        total = 0
        dev = 0.0
        features = []
        for f in fc.features:
            g, d = simplify_geometry_with_deviation(f.geometry, tol)
            total += vertex_count(g)
            dev = max(dev, d)
            features.append(Feature(g, f.attributes, f.id))
        size = len(write_geojson(FeatureCollection(fc.crs, tuple(features)), PrecisionPolicy(5)))
        rows.append(SweepRow(tol, total, size, dev))
    return SweepReport(tuple(rows))


def reduction_report(
    layer_name: str, before: FeatureCollection, after: FeatureCollection
) -> ReductionRow:
    unfiltered = sum(vertex_count(f.geometry) for f in before.features)
    filtered = sum(vertex_count(f.geometry) for f in after.features)
    if unfiltered == 0:
        raise GeometryError("empty layer")
    return ReductionRow(layer_name, unfiltered, filtered)


REPORT_CSV_HEADER = "layer,unfiltered,filtered,percent_removed"


def format_report_csv(rows) -> str:
    lines = [REPORT_CSV_HEADER]
    for r in rows:
        lines.append(f"{r.layer_name},{r.unfiltered},{r.filtered},{r.percent_removed:.8f}")
    return "\n".join(lines) + "\n"


def format_report_table(rows) -> str:
    """Aligned text table in the layer/unfiltered/filtered/percent layout."""
    header = ("Layer name", "unfiltered", "filtered", "percent removed")
    body = [
        (r.layer_name, f"{r.unfiltered:,}", f"{r.filtered:,}", f"{r.percent_removed:.8f}")
        for r in rows
    ]
    widths = [
        max(len(header[i]), *(len(b[i]) for b in body)) if body else len(header[i])
        for i in range(4)
    ]
    out = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    for b in body:
        out.append("  ".join(v.rjust(widths[i]) if i else v.ljust(widths[0]) for i, v in enumerate(b)))
    return "\n".join(out) + "\n"
