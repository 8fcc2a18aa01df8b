"""GeoJSON (RFC 7946) serialization with configurable coordinate precision.

Numbers are written with the shortest representation inside the decimal
budget (half-away-from-zero rounding, trailing zeros trimmed) so file-size
comparisons across precision levels are meaningful. Output key order is
fixed so identical collections serialize byte-identically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .errors import GeoJsonError
from .model import Feature, FeatureCollection, Geometry, validate_geometry


@dataclass(frozen=True)
class PrecisionPolicy:
    decimals: int = 5

    def __post_init__(self) -> None:
        if not (0 <= self.decimals <= 15):
            raise GeoJsonError("decimals out of range")


def format_number(value: float, decimals: int) -> str:
    """Shortest decimal representation with at most `decimals` fraction digits."""
    q = Decimal(1).scaleb(-decimals)
    d = Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP)
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("-0", ""):
        s = "0"
    return s


def _coords_json(coords, decimals: int) -> str:
    if isinstance(coords, tuple) and coords and isinstance(coords[0], float):
        return "[%s,%s]" % (
            format_number(coords[0], decimals),
            format_number(coords[1], decimals),
        )
    return "[%s]" % ",".join(_coords_json(c, decimals) for c in coords)


def _geometry_json(g: Geometry, decimals: int) -> str:
    return '{"type":"%s","coordinates":%s}' % (g.kind, _coords_json(g.coords, decimals))


def _feature_json(f: Feature, decimals: int) -> str:
    parts = ['"type":"Feature"']
    if f.id is not None:
        parts.append('"id":%s' % json.dumps(f.id, ensure_ascii=False))
    props = (
        "{"
        + ",".join(
            "%s:%s" % (json.dumps(k, ensure_ascii=False), json.dumps(v, ensure_ascii=False))
            for k, v in f.attributes.items()
        )
        + "}"
    )
    parts.append('"properties":%s' % props)
    parts.append('"geometry":%s' % _geometry_json(f.geometry, decimals))
    return "{" + ",".join(parts) + "}"


def write_geojson(fc: FeatureCollection, policy: PrecisionPolicy = PrecisionPolicy()) -> bytes:
    """Serialize fc as an RFC 7946 FeatureCollection document (UTF-8, no BOM)."""
    if fc.crs != 4326:
        raise GeoJsonError("GeoJSON requires EPSG:4326")
    body = ",".join(_feature_json(f, policy.decimals) for f in fc.features)
    return ('{"type":"FeatureCollection","features":[%s]}' % body).encode("utf-8")


_KINDS = {"Point", "MultiPoint", "LineString", "Polygon", "MultiPolygon"}


def _parse_coords(kind: str, raw) -> tuple:
    def pos(c):
        if not isinstance(c, list) or len(c) < 2:
            raise GeoJsonError("invalid coordinate")
        return (float(c[0]), float(c[1]))

    try:
        if kind == "Point":
            return pos(raw)
        if kind in ("MultiPoint", "LineString"):
            return tuple(pos(c) for c in raw)
        if kind == "Polygon":
            return tuple(tuple(pos(c) for c in ring) for ring in raw)
        return tuple(tuple(tuple(pos(c) for c in ring) for ring in poly) for poly in raw)
    except (TypeError, ValueError) as exc:
        raise GeoJsonError(f"invalid coordinates: {exc}") from None


def _parse_geometry(obj) -> Geometry:
    if not isinstance(obj, dict):
        raise GeoJsonError("unsupported geometry")
    kind = obj.get("type")
    if kind not in _KINDS:
        raise GeoJsonError("unsupported geometry")
    g = Geometry(kind, _parse_coords(kind, obj.get("coordinates")))
    validate_geometry(g)
    return g


def _parse_feature(obj) -> Feature:
    props = obj.get("properties") or {}
    if not isinstance(props, dict):
        raise GeoJsonError("invalid properties")
    fid = obj.get("id")
    if fid is not None:
        fid = str(fid)
    return Feature(_parse_geometry(obj.get("geometry")), dict(props), fid)


def read_geojson(data: bytes | str) -> FeatureCollection:
    """Parse a FeatureCollection, Feature, or bare geometry document."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeoJsonError(f"parse error at byte {exc.pos}") from None
    if not isinstance(obj, dict):
        raise GeoJsonError("unsupported geometry")
    root = obj.get("type")
    if root == "FeatureCollection":
        feats = obj.get("features")
        if not isinstance(feats, list):
            raise GeoJsonError("invalid FeatureCollection")
        return FeatureCollection(4326, tuple(_parse_feature(f) for f in feats))
    if root == "Feature":
        return FeatureCollection(4326, (_parse_feature(obj),))
    if root in _KINDS:
        return FeatureCollection(4326, (Feature(_parse_geometry(obj), {}),))
    raise GeoJsonError("unsupported geometry")
