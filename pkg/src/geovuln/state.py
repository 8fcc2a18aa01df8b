"""Shareable application state and its URL token codec.

The token carries the full state (not a session id): canonical JSON with
sorted keys and no whitespace, base64url-encoded without padding, so any
session that decodes the token reproduces the exact maps, layers and
viewports of the one that encoded it.
"""
from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass, field

from .errors import StateError

STATE_VERSION = 1
MAX_MAPS = 4

# Default viewport over the Hawaiian Islands.
DEFAULT_CENTER = (-157.5, 20.5)
DEFAULT_ZOOM = 7.0


@dataclass(frozen=True)
class Viewport:
    lon: float = DEFAULT_CENTER[0]
    lat: float = DEFAULT_CENTER[1]
    zoom: float = DEFAULT_ZOOM


@dataclass(frozen=True)
class CensusSelection:
    layer_id: str
    metric: str
    palette: str


@dataclass(frozen=True)
class MapState:
    census: CensusSelection | None = None
    hazard_vectors: tuple[str, ...] = ()
    raster: str | None = None
    points: tuple[str, ...] = ()
    viewport: Viewport = field(default_factory=Viewport)


@dataclass(frozen=True)
class TableState:
    dataset: str
    sort_column: str | None = None
    direction: str = "asc"
    search: str | None = None


@dataclass(frozen=True)
class AppState:
    version: int = STATE_VERSION
    maps: tuple[MapState, ...] = (MapState(),)
    table: TableState | None = None


def default_state() -> AppState:
    return AppState()


def validate_state(s: AppState) -> None:
    if s.version != STATE_VERSION:
        raise StateError(f"unsupported state version {s.version}")
    if len(s.maps) > MAX_MAPS:
        raise StateError("state violates map limit")
    if len(s.maps) < 1:
        raise StateError("state requires at least one map")
    for m in s.maps:
        if len(set(m.hazard_vectors)) != len(m.hazard_vectors):
            raise StateError("duplicate hazard layer in map state")
        if len(set(m.points)) != len(m.points):
            raise StateError("duplicate point layer in map state")
        if not (-180.0 <= m.viewport.lon <= 180.0 and -90.0 <= m.viewport.lat <= 90.0):
            raise StateError("viewport outside EPSG:4326 domain")
    if s.table is not None and s.table.direction not in ("asc", "desc"):
        raise StateError("invalid table sort direction")


def _num(v: float):
    # Integral floats serialize as ints so tokens are identical across
    # JSON implementations (Python "7.0" vs JavaScript "7").
    f = float(v)
    return int(f) if f.is_integer() else f


def _state_doc(s: AppState) -> dict:
    return {
        "version": s.version,
        "maps": [
            {
                "census": (
                    None
                    if m.census is None
                    else {
                        "layer_id": m.census.layer_id,
                        "metric": m.census.metric,
                        "palette": m.census.palette,
                    }
                ),
                "hazard_vectors": sorted(m.hazard_vectors),
                "raster": m.raster,
                "points": sorted(m.points),
                "viewport": {
                    "lon": _num(m.viewport.lon),
                    "lat": _num(m.viewport.lat),
                    "zoom": _num(m.viewport.zoom),
                },
            }
            for m in s.maps
        ],
        "table": (
            None
            if s.table is None
            else {
                "dataset": s.table.dataset,
                "sort_column": s.table.sort_column,
                "direction": s.table.direction,
                "search": s.table.search,
            }
        ),
    }


def state_to_doc(s: AppState) -> dict:
    """JSON-ready document form of a state (the canonical wire shape)."""
    return _state_doc(s)


def encode_state(s: AppState) -> str:
    """Canonical JSON -> base64url without padding."""
    validate_state(s)
    raw = json.dumps(_state_doc(s), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return base64.urlsafe_b64encode(raw).decode("ascii").rstrip("=")


def _require(cond: bool, msg: str = "malformed state token") -> None:
    if not cond:
        raise StateError(msg)


def _parse_map(obj) -> MapState:
    _require(isinstance(obj, dict))
    census = None
    c = obj.get("census")
    if c is not None:
        _require(isinstance(c, dict))
        _require(all(isinstance(c.get(k), str) for k in ("layer_id", "metric", "palette")))
        census = CensusSelection(c["layer_id"], c["metric"], c["palette"])
    hv = obj.get("hazard_vectors", [])
    pts = obj.get("points", [])
    _require(isinstance(hv, list) and all(isinstance(x, str) for x in hv))
    _require(isinstance(pts, list) and all(isinstance(x, str) for x in pts))
    raster = obj.get("raster")
    _require(raster is None or isinstance(raster, str))
    vp = obj.get("viewport") or {}
    _require(isinstance(vp, dict))
    try:
        viewport = Viewport(float(vp["lon"]), float(vp["lat"]), float(vp["zoom"]))
    except (KeyError, TypeError, ValueError):
        raise StateError("malformed state token") from None
    return MapState(census, tuple(hv), raster, tuple(pts), viewport)


def decode_state(token: str) -> AppState:
    """Decode and fully validate a state token."""
    try:
        pad = "=" * (-len(token) % 4)
        raw = base64.urlsafe_b64decode(token.encode("ascii") + pad.encode("ascii"))
        doc = json.loads(raw.decode("utf-8"))
    except (binascii.Error, UnicodeError, ValueError) as exc:
        if isinstance(exc, StateError):
            raise
        raise StateError("malformed state token") from None
    _require(isinstance(doc, dict))
    version = doc.get("version")
    if version != STATE_VERSION:
        raise StateError(f"unsupported state version {version}")
    maps_raw = doc.get("maps")
    _require(isinstance(maps_raw, list))
    maps = tuple(_parse_map(m) for m in maps_raw)
    table = None
    t = doc.get("table")
    if t is not None:
        _require(isinstance(t, dict))
        _require(isinstance(t.get("dataset"), str))
        table = TableState(
            t["dataset"],
            t.get("sort_column"),
            t.get("direction", "asc"),
            t.get("search"),
        )
    state = AppState(version, maps, table)
    validate_state(state)
    return state
