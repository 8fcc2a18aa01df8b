"""ESRI shapefile triplet parser: SHP geometry, SHX index, DBF attributes.

Shape types 0 (Null), 1 (Point), 3 (PolyLine), 5 (Polygon) and 8 (MultiPoint)
are supported; Z/M variants are rejected explicitly. The SHX is used for
validation only; the SHP is read sequentially. Every malformed input raises
ShapefileError: record sizes are validated against their headers before any
allocation so arbitrary byte input can never crash the parser.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import ShapefileError
from .model import Feature, FeatureCollection, Geometry

SUPPORTED_SHAPE_TYPES = {0, 1, 3, 5, 8}


@dataclass(frozen=True)
class ShxIndex:
    records: tuple[tuple[int, int], ...]  # (offset_words, length_words)


@dataclass(frozen=True)
class DbfField:
    name: str
    type: str
    length: int
    decimals: int


@dataclass(frozen=True)
class DbfTable:
    field_descriptors: tuple[DbfField, ...]
    rows: tuple[dict, ...]


class _Reader:
    """Bounds-checked cursor over a byte buffer."""

    def __init__(self, data: bytes, pos: int = 0) -> None:
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise ShapefileError("unexpected end of file")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32be(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def i32be(self) -> int:
        return struct.unpack(">i", self.take(4))[0]

    def i32le(self) -> int:
        return struct.unpack("<i", self.take(4))[0]

    def f64le(self) -> float:
        return struct.unpack("<d", self.take(8))[0]


def parse_shx(data: bytes) -> ShxIndex:
    """Parse the .shx record index (offsets/lengths in 16-bit words)."""
    if len(data) < 100:
        raise ShapefileError("unexpected end of file")
    r = _Reader(data)
    if r.i32be() != 9994:
        raise ShapefileError("not a shapefile index")
    r.take(20)
    file_length_words = r.i32be()
    n_records, rem = divmod(file_length_words * 2 - 100, 8)
    if n_records < 0 or rem:
        raise ShapefileError("corrupt record")
    r.pos = 100
    records = []
    prev_offset = 49
    for _ in range(n_records):
        offset = r.i32be()
        length = r.i32be()
        if offset < 50 or offset <= prev_offset or length < 0:
            raise ShapefileError("corrupt record")
        prev_offset = offset
        records.append((offset, length))
    return ShxIndex(tuple(records))


def _read_point(r: _Reader) -> Geometry:
    x = r.f64le()
    y = r.f64le()
    return Geometry("Point", (x, y))


def _read_multipoint(r: _Reader, content_len: int) -> Geometry:
    r.take(32)  # bbox
    n = r.i32le()
    if n < 1 or 40 + 16 * n != content_len:
        raise ShapefileError("corrupt record")
    return Geometry("MultiPoint", tuple((r.f64le(), r.f64le()) for _ in range(n)))


def _read_parts(r: _Reader, content_len: int) -> list[list[tuple[float, float]]]:
    r.take(32)  # bbox
    num_parts = r.i32le()
    num_points = r.i32le()
    if num_parts < 1 or num_points < 0:
        raise ShapefileError("corrupt record")
    if 44 + 4 * num_parts + 16 * num_points != content_len:
        raise ShapefileError("corrupt record")
    starts = [r.i32le() for _ in range(num_parts)]
    bounds = starts + [num_points]
    for a, b in zip(bounds, bounds[1:]):
        if not (0 <= a < b <= num_points):
            raise ShapefileError("corrupt record")
    points = [(r.f64le(), r.f64le()) for _ in range(num_points)]
    return [points[a:b] for a, b in zip(bounds, bounds[1:])]


def _ring_area(ring) -> float:
    area = 0.0
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        area += x1 * y2 - x2 * y1
    return area / 2.0


def _assemble_polygon(parts) -> Geometry:
    """Group rings into polygons: clockwise rings (non-positive shoelace
    area) open a new polygon, counter-clockwise rings are holes."""
    rings = []
    for part in parts:
        ring = list(part)
        if ring[0] != ring[-1]:
            ring.append(ring[0])
        rings.append(tuple(ring))
    polygons: list[list[tuple]] = []
    for ring in rings:
        if _ring_area(ring) <= 0 or not polygons:
            polygons.append([ring])
        else:
            polygons[-1].append(ring)
    if len(polygons) == 1:
        return Geometry("Polygon", tuple(polygons[0]))
    return Geometry("MultiPolygon", tuple(tuple(p) for p in polygons))


def parse_shp(data: bytes) -> list[tuple[int, Geometry | None]]:
    """Parse .shp records in file order; Null shapes yield None geometry."""
    if len(data) < 100:
        raise ShapefileError("unexpected end of file")
    r = _Reader(data)
    if r.i32be() != 9994:
        raise ShapefileError("not a shapefile")
    r.take(20)
    file_length_words = r.i32be()
    if file_length_words * 2 != len(data):
        raise ShapefileError("unexpected end of file")
    r.take(4)  # version
    file_shape_type = r.i32le()
    if file_shape_type not in SUPPORTED_SHAPE_TYPES:
        raise ShapefileError(f"unsupported shape type {file_shape_type}")
    r.pos = 100
    records: list[tuple[int, Geometry | None]] = []
    while r.pos < len(data):
        record_number = r.i32be()
        content_words = r.i32be()
        if content_words < 2:
            raise ShapefileError("corrupt record")
        content_len = content_words * 2
        body = _Reader(r.take(content_len))
        shape_type = body.i32le()
        if shape_type == 0:
            if content_len != 4:
                raise ShapefileError("corrupt record")
            records.append((record_number, None))
            continue
        if shape_type not in SUPPORTED_SHAPE_TYPES:
            raise ShapefileError(f"unsupported shape type {shape_type}")
        if shape_type != file_shape_type:
            raise ShapefileError("corrupt record")
        if shape_type == 1:
            if content_len != 20:
                raise ShapefileError("corrupt record")
            geom: Geometry = _read_point(body)
        elif shape_type == 8:
            geom = _read_multipoint(body, content_len)
        else:
            parts = _read_parts(body, content_len)
            if shape_type == 3:
                if len(parts) != 1:
                    raise ShapefileError("multi-part polyline unsupported")
                geom = Geometry("LineString", tuple(parts[0]))
            else:
                geom = _assemble_polygon(parts)
        records.append((record_number, geom))
    return records


def _dbf_value(field: DbfField, raw: bytes):
    text = raw.decode("ascii", errors="replace")
    if field.type == "C":
        return text.rstrip(" \x00")
    if field.type in ("N", "F"):
        s = text.strip().strip("\x00").strip()
        if not s or s == "*" * len(s):
            return None
        try:
            return float(s) if ("." in s or "e" in s or "E" in s) else int(s)
        except ValueError:
            return None
    if field.type == "L":
        c = text[:1]
        if c in "TtYy":
            return True
        if c in "FfNn":
            return False
        return None
    if field.type == "D":
        s = text.strip()
        if len(s) == 8 and s.isdigit():
            return f"{s[0:4]}-{s[4:6]}-{s[6:8]}"
        return None
    return text.rstrip(" ")


def parse_dbf(data: bytes) -> DbfTable:
    """Parse a dBASE III table: field descriptors plus undeleted rows."""
    if len(data) < 33:
        raise ShapefileError("malformed DBF header")
    if data[0] & 0x0F != 0x03:
        raise ShapefileError("malformed DBF header")
    num_records = struct.unpack("<I", data[4:8])[0]
    header_size = struct.unpack("<H", data[8:10])[0]
    record_size = struct.unpack("<H", data[10:12])[0]
    fields: list[DbfField] = []
    pos = 32
    while True:
        if pos >= len(data) or pos >= header_size:
            raise ShapefileError("malformed DBF header")
        if data[pos] == 0x0D:
            break
        if pos + 32 > len(data):
            raise ShapefileError("malformed DBF header")
        desc = data[pos : pos + 32]
        name = desc[0:11].split(b"\x00", 1)[0].decode("ascii", errors="replace")
        ftype = chr(desc[11])
        if ftype not in "CNFLD":
            raise ShapefileError("malformed DBF header")
        fields.append(DbfField(name, ftype, desc[16], desc[17]))
        pos += 32
    if record_size != 1 + sum(f.length for f in fields):
        raise ShapefileError("malformed DBF header")
    if header_size + num_records * record_size > len(data):
        raise ShapefileError("truncated DBF")
    rows = []
    pos = header_size
    for _ in range(num_records):
        rec = data[pos : pos + record_size]
        pos += record_size
        if rec[0] == 0x2A:  # deleted
            continue
        row = {}
        off = 1
        for f in fields:
            row[f.name] = _dbf_value(f, rec[off : off + f.length])
            off += f.length
        rows.append(row)
    return DbfTable(tuple(fields), tuple(rows))


def assemble(
    shp_records: list[tuple[int, Geometry | None]], dbf: DbfTable, crs: int
) -> tuple[FeatureCollection, int]:
    """Pair geometry i with attribute row i; null geometries are dropped and
    counted as warnings."""
    if len(shp_records) != len(dbf.rows):
        raise ShapefileError(
            f"geometry/attribute count mismatch ({len(shp_records)} vs {len(dbf.rows)})"
        )
    features = []
    warnings = 0
    for (record_number, geom), row in zip(shp_records, dbf.rows):
        if geom is None:
            warnings += 1
            continue
        features.append(Feature(geom, dict(row), str(record_number)))
    return FeatureCollection(crs, tuple(features)), warnings


def read_triplet(shp: bytes, shx: bytes, dbf: bytes, crs: int) -> tuple[FeatureCollection, int]:
    """Parse and cross-validate the full triplet."""
    index = parse_shx(shx)
    records = parse_shp(shp)
    if len(index.records) != len(records):
        raise ShapefileError("corrupt record")
    table = parse_dbf(dbf)
    return assemble(records, table, crs)
