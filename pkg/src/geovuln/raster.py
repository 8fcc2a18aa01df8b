"""Single-band GeoTIFF parsing, overview pyramids, and windowed reads.

Only strip-organized, uncompressed classic TIFF is accepted; everything else
fails loudly with the unsupported feature named. Overviews are held in memory
alongside the base grid; level k halves the dimensions of level k-1 (ceil),
with trailing odd rows/columns aggregated from their remainder blocks.
"""
from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import RasterError
from .model import BBox

# (origin_x, origin_y, pixel_size_x, pixel_size_y); pixel_size_y < 0 north-up
Geotransform = tuple[float, float, float, float]


@dataclass(frozen=True)
class RasterGrid:
    width: int
    height: int
    values: np.ndarray  # shape (height, width)
    nodata: float | None
    geotransform: Geotransform
    crs: int = 4326

    def extent(self) -> BBox:
        ox, oy, px, py = self.geotransform
        xs = (ox, ox + px * self.width)
        ys = (oy, oy + py * self.height)
        return BBox(min(xs), min(ys), max(xs), max(ys))


@dataclass(frozen=True)
class RasterPyramid:
    levels: tuple[RasterGrid, ...]
    method: str

    @property
    def base(self) -> RasterGrid:
        return self.levels[0]


@dataclass(frozen=True)
class WindowGrid:
    width: int
    height: int
    values: np.ndarray
    bbox: BBox
    level_used: int
    nodata: float | None = None


_SAMPLE_DTYPES = {
    # (sample_format, bits) -> dtype char
    (1, 8): "u1",
    (1, 16): "u2",
    (1, 32): "u4",
    (2, 8): "i1",
    (2, 16): "i2",
    (2, 32): "i4",
    (3, 32): "f4",
}


def _read_ifd_entries(data: bytes, bo: str, offset: int):
    if offset + 2 > len(data):
        raise RasterError("truncated TIFF")
    (count,) = struct.unpack(bo + "H", data[offset : offset + 2])
    entries = {}
    pos = offset + 2
    type_sizes = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 11: 4, 12: 8}
    type_fmt = {1: "B", 3: "H", 4: "I", 11: "f", 12: "d"}
    for _ in range(count):
        if pos + 12 > len(data):
            raise RasterError("truncated TIFF")
        tag, ftype, n = struct.unpack(bo + "HHI", data[pos : pos + 8])
        size = type_sizes.get(ftype, 0) * n
        if size == 0:
            pos += 12
            continue
        if size <= 4:
            raw = data[pos + 8 : pos + 8 + size]
        else:
            (voff,) = struct.unpack(bo + "I", data[pos + 8 : pos + 12])
            if voff + size > len(data):
                raise RasterError("truncated TIFF")
            raw = data[voff : voff + size]
        if ftype == 2:  # ASCII
            entries[tag] = raw.split(b"\x00", 1)[0].decode("ascii", errors="replace")
        else:
            entries[tag] = list(struct.unpack(bo + str(n) + type_fmt[ftype], raw))
        pos += 12
    return entries


def parse_geotiff(data: bytes) -> RasterGrid:
    """Parse a single-band strip-organized uncompressed classic GeoTIFF."""
    if len(data) < 8:
        raise RasterError("not a TIFF")
    order = data[0:2]
    if order == b"II":
        bo = "<"
    elif order == b"MM":
        bo = ">"
    else:
        raise RasterError("not a TIFF")
    (magic,) = struct.unpack(bo + "H", data[2:4])
    if magic == 43:
        raise RasterError("BigTIFF unsupported")
    if magic != 42:
        raise RasterError("not a TIFF")
    (ifd_offset,) = struct.unpack(bo + "I", data[4:8])
    tags = _read_ifd_entries(data, bo, ifd_offset)

    def one(tag, default=None):
        v = tags.get(tag)
        if v is None:
            return default
        return v[0] if isinstance(v, list) else v

    width = one(256)
    height = one(257)
    if not width or not height:
        raise RasterError("not a TIFF")
    if one(259, 1) != 1:
        raise RasterError("compression unsupported")
    if one(277, 1) != 1:
        raise RasterError("multi-band unsupported")
    if 322 in tags or 323 in tags:
        raise RasterError("tiled TIFF unsupported")
    bits = one(258, 8)
    sample_format = one(339, 1)
    dtype_char = _SAMPLE_DTYPES.get((sample_format, bits))
    if dtype_char is None:
        raise RasterError(f"sample format {sample_format}/{bits}-bit unsupported")
    dtype = np.dtype(bo + dtype_char)

    strip_offsets = tags.get(273)
    strip_counts = tags.get(279)
    rows_per_strip = one(278, height)
    if not strip_offsets or not strip_counts:
        raise RasterError("not a TIFF")

    pixel_scale = tags.get(33550)
    tiepoint = tags.get(33922)
    if pixel_scale is None or tiepoint is None:
        raise RasterError("not a GeoTIFF")
    # Tiepoint maps raster (i, j) -> model (x, y); pixel scale y is applied
    # downward (north-up), hence the negative pixel_size_y.
    geotransform: Geotransform = (
        tiepoint[3] - tiepoint[0] * pixel_scale[0],
        tiepoint[4] + tiepoint[1] * pixel_scale[1],
        pixel_scale[0],
        -pixel_scale[1],
    )
    nodata = None
    if 42113 in tags:
        try:
            nodata = float(str(tags[42113]).strip())
        except ValueError:
            nodata = None
    crs = 4326
    geokeys = tags.get(34735)
    if isinstance(geokeys, list) and len(geokeys) >= 4:
        # GeoKeyDirectory: header + (key, location, count, value) quads.
        for i in range(4, len(geokeys) - 3, 4):
            if geokeys[i] in (2048, 3072) and geokeys[i + 1] == 0:
                crs = geokeys[i + 3]

    raw = bytearray()
    row = 0
    for off, cnt in zip(strip_offsets, strip_counts):
        if off + cnt > len(data):
            raise RasterError("truncated TIFF")
        raw += data[off : off + cnt]
        row += rows_per_strip
    expected = width * height * dtype.itemsize
    if len(raw) < expected:
        raise RasterError("truncated TIFF")
    values = (
        np.frombuffer(bytes(raw[:expected]), dtype=dtype)
        .reshape(height, width)
        .astype(np.float64)
    )
    return RasterGrid(width, height, values, nodata, geotransform, crs)


def _downsample(grid: RasterGrid, method: str) -> RasterGrid:
    h, w = grid.values.shape
    nh, nw = (h + 1) // 2, (w + 1) // 2
    if method == "nearest":
        out = grid.values[::2, ::2].copy()
    else:
        padded = np.full((nh * 2, nw * 2), np.nan)
        v = grid.values.astype(np.float64)
        if grid.nodata is not None:
            v = np.where(v == grid.nodata, np.nan, v)
        padded[:h, :w] = v
        blocks = padded.reshape(nh, 2, nw, 2).transpose(0, 2, 1, 3).reshape(nh, nw, 4)
        with np.errstate(invalid="ignore"), warnings.catch_warnings():
            # all-nodata blocks are legal and must stay nodata
            warnings.simplefilter("ignore", RuntimeWarning)
            out = np.nanmean(blocks, axis=2)
        if grid.nodata is not None:
            out = np.where(np.isnan(out), grid.nodata, out)
        else:
            # Padding NaN can only appear where the whole block was padding,
            # which cannot happen for in-range blocks.
            out = np.nan_to_num(out, nan=0.0) if np.isnan(out).any() else out
    ox, oy, px, py = grid.geotransform
    return RasterGrid(nw, nh, out, grid.nodata, (ox, oy, px * 2, py * 2), grid.crs)


def build_overviews(grid: RasterGrid, max_levels: int, method: str = "average") -> RasterPyramid:
    """Build the overview pyramid; stops at 1x1 or max_levels."""
    if method not in ("average", "nearest"):
        raise RasterError(f"unknown overview method {method}")
    levels = [grid]
    while len(levels) - 1 < max_levels and (levels[-1].width > 1 or levels[-1].height > 1):
        levels.append(_downsample(levels[-1], method))
    return RasterPyramid(tuple(levels), method)


def select_level(pyramid: RasterPyramid, requested_pixels_per_unit: float) -> int:
    """Coarsest level whose resolution still meets the request; clamped."""
    if requested_pixels_per_unit <= 0:
        raise RasterError("requested resolution must be positive")
    native = 1.0 / pyramid.base.geotransform[2]
    best = 0
    for k, level in enumerate(pyramid.levels):
        res = 1.0 / level.geotransform[2]
        if res >= requested_pixels_per_unit * (1.0 - 1e-12):
            best = k
    if native < requested_pixels_per_unit:
        return 0
    if 1.0 / pyramid.levels[-1].geotransform[2] >= requested_pixels_per_unit:
        return len(pyramid.levels) - 1
    return best


def read_window(pyramid: RasterPyramid, bbox: BBox, max_px: int) -> WindowGrid:
    """Clip the finest level whose window fits in max_px on its longer side."""
    if max_px < 1:
        raise RasterError("max_px must be >= 1")
    if not pyramid.base.extent().intersects(bbox):
        raise RasterError("window outside raster extent")
    chosen = len(pyramid.levels) - 1
    for k, level in enumerate(pyramid.levels):
        ox, oy, px, py = level.geotransform
        wpx = (bbox.max_x - bbox.min_x) / px
        hpx = (bbox.max_y - bbox.min_y) / abs(py)
        if max(wpx, hpx) <= max_px * (1.0 + 1e-9):
            chosen = k
            break
    level = pyramid.levels[chosen]
    ox, oy, px, py = level.geotransform
    # Pixel index range covering the bbox, clipped to the grid.
    c0 = max(0, int(math.floor((bbox.min_x - ox) / px)))
    c1 = min(level.width, int(math.ceil((bbox.max_x - ox) / px)))
    r0 = max(0, int(math.floor((bbox.max_y - oy) / py)))
    r1 = min(level.height, int(math.ceil((bbox.min_y - oy) / py)))
    if c1 <= c0 or r1 <= r0:
        raise RasterError("window outside raster extent")
    sub = level.values[r0:r1, c0:c1]
    # Decimate if even the coarsest level exceeds the pixel budget.
    sy = max(1, -(-sub.shape[0] // max_px))
    sx = max(1, -(-sub.shape[1] // max_px))
    if sy > 1 or sx > 1:
        sub = sub[::sy, ::sx]
        px, py = px * sx, py * sy
    out_bbox = BBox(
        ox + c0 * (level.geotransform[2]),
        oy + r1 * (level.geotransform[3]),
        ox + c1 * (level.geotransform[2]),
        oy + r0 * (level.geotransform[3]),
    )
    return WindowGrid(sub.shape[1], sub.shape[0], sub, out_bbox, chosen, pyramid.base.nodata)


def pyramid_to_json(pyramid: RasterPyramid) -> bytes:
    """Internal pyramid file: base grid + method, overviews rebuilt on load."""
    base = pyramid.base
    doc = {
        "version": 1,
        "width": base.width,
        "height": base.height,
        "values": base.values.flatten().tolist(),
        "nodata": base.nodata,
        "geotransform": list(base.geotransform),
        "crs": base.crs,
        "method": pyramid.method,
        "levels": len(pyramid.levels) - 1,
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=True).encode("utf-8")


def pyramid_from_json(data: bytes) -> RasterPyramid:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise RasterError(f"bad pyramid file: {exc}") from None
    values = np.array(doc["values"], dtype=np.float64).reshape(doc["height"], doc["width"])
    grid = RasterGrid(
        doc["width"],
        doc["height"],
        values,
        doc["nodata"],
        tuple(doc["geotransform"]),
        doc.get("crs", 4326),
    )
    return build_overviews(grid, doc["levels"], doc["method"])
