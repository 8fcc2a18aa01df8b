"""Transforms between the source CRSs (EPSG:3857, EPSG:3750) and EPSG:4326.

Web Mercator is spherical per its EPSG definition; UTM zone 4N is ellipsoidal
on GRS80. Each ProjectionSpec pins its own constants so the two models are
never mixed. The transverse Mercator forward/inverse use the Krueger series
truncated at n^4, sub-millimeter within a UTM zone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ProjectionError
from .model import Feature, FeatureCollection, map_coords

# Web Mercator sphere radius, meters.
MERCATOR_RADIUS = 6378137.0
MERCATOR_MAX_X = math.pi * MERCATOR_RADIUS  # 20037508.342789244
MERCATOR_MAX_LAT = 85.06

# GRS80 ellipsoid.
GRS80_A = 6378137.0
GRS80_F = 1.0 / 298.257222101


@dataclass(frozen=True)
class ProjectionSpec:
    """Parameters for one supported EPSG code."""

    code: int
    central_meridian: float = 0.0
    scale: float = 1.0
    false_easting: float = 0.0
    false_northing: float = 0.0
    a: float = GRS80_A
    f: float = GRS80_F

    @staticmethod
    def for_epsg(code: int) -> "ProjectionSpec":
        if code == 4326:
            return ProjectionSpec(code=4326)
        if code == 3857:
            return ProjectionSpec(code=3857, a=MERCATOR_RADIUS, f=0.0)
        if code == 3750:
            # UTM zone 4N on GRS80 (NAD83 HARN).
            return ProjectionSpec(
                code=3750,
                central_meridian=-159.0,
                scale=0.9996,
                false_easting=500000.0,
                false_northing=0.0,
            )
        raise ProjectionError(f"unsupported EPSG code {code}")


UTM_ZONE_4N = ProjectionSpec.for_epsg(3750)


def mercator_to_geographic(x: float, y: float) -> tuple[float, float]:
    """Inverse spherical Web Mercator: meters to (lon, lat) degrees."""
    if abs(x) > MERCATOR_MAX_X * (1.0 + 1e-9):
        raise ProjectionError("coordinate outside projection domain")
    lon = math.degrees(x / MERCATOR_RADIUS)
    lat = math.degrees(2.0 * math.atan(math.exp(y / MERCATOR_RADIUS)) - math.pi / 2.0)
    return lon, lat


def geographic_to_mercator(lon: float, lat: float) -> tuple[float, float]:
    """Forward spherical Web Mercator: degrees to meters."""
    if abs(lat) >= MERCATOR_MAX_LAT:
        raise ProjectionError("latitude outside Mercator domain")
    x = MERCATOR_RADIUS * math.radians(lon)
    y = MERCATOR_RADIUS * math.asinh(math.tan(math.radians(lat)))
    return x, y


def _tm_constants(spec: ProjectionSpec):
    n = spec.f / (2.0 - spec.f)
    n2, n3, n4 = n * n, n**3, n**4
    # Rectifying radius.
    big_a = spec.a / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0)
    alpha = (
        n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0,
        13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0,
        61.0 * n3 / 240.0 - 103.0 * n4 / 140.0,
        49561.0 * n4 / 161280.0,
    )
    beta = (
        n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0,
        n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0,
        17.0 * n3 / 480.0 - 37.0 * n4 / 840.0,
        4397.0 * n4 / 161280.0,
    )
    delta = (
        2.0 * n - 2.0 * n2 / 3.0 - 2.0 * n3 + 116.0 * n4 / 45.0,
        7.0 * n2 / 3.0 - 8.0 * n3 / 5.0 - 227.0 * n4 / 45.0,
        56.0 * n3 / 15.0 - 136.0 * n4 / 35.0,
        4279.0 * n4 / 630.0,
    )
    return n, big_a, alpha, beta, delta


_TM_CACHE: dict[int, tuple] = {}


def _tm(spec: ProjectionSpec):
    if spec.code not in _TM_CACHE:
        _TM_CACHE[spec.code] = _tm_constants(spec)
    return _TM_CACHE[spec.code]


def geographic_to_utm(
    lon: float, lat: float, spec: ProjectionSpec = UTM_ZONE_4N
) -> tuple[float, float]:
    """Krueger-series forward transverse Mercator (degrees to easting/northing)."""
    if spec.code != 3750:
        raise ProjectionError(f"unsupported EPSG code {spec.code}")
    if abs(lon - spec.central_meridian) > 6.0:
        raise ProjectionError("coordinate outside UTM zone domain")
    n, big_a, alpha, _, _ = _tm(spec)
    phi = math.radians(lat)
    lam = math.radians(lon - spec.central_meridian)
    e = 2.0 * math.sqrt(n) / (1.0 + n)
    t = math.sinh(
        math.atanh(math.sin(phi)) - e * math.atanh(e * math.sin(phi))
    )
    xi = math.atan2(t, math.cos(lam))
    eta = math.atanh(math.sin(lam) / math.hypot(1.0, t))
    x = eta
    y = xi
    for j, a_j in enumerate(alpha, start=1):
        x += a_j * math.cos(2.0 * j * xi) * math.sinh(2.0 * j * eta)
        y += a_j * math.sin(2.0 * j * xi) * math.cosh(2.0 * j * eta)
    easting = spec.false_easting + spec.scale * big_a * x
    northing = spec.false_northing + spec.scale * big_a * y
    return easting, northing


def utm_to_geographic(
    easting: float, northing: float, spec: ProjectionSpec = UTM_ZONE_4N
) -> tuple[float, float]:
    """Krueger-series inverse transverse Mercator (meters to lon/lat degrees)."""
    if spec.code != 3750:
        raise ProjectionError(f"unsupported EPSG code {spec.code}")
    if not (100000.0 <= easting <= 900000.0):
        raise ProjectionError("coordinate outside UTM zone domain")
    n, big_a, _, beta, delta = _tm(spec)
    xi = (northing - spec.false_northing) / (spec.scale * big_a)
    eta = (easting - spec.false_easting) / (spec.scale * big_a)
    xi_p = xi
    eta_p = eta
    for j, b_j in enumerate(beta, start=1):
        xi_p -= b_j * math.sin(2.0 * j * xi) * math.cosh(2.0 * j * eta)
        eta_p -= b_j * math.cos(2.0 * j * xi) * math.sinh(2.0 * j * eta)
    chi = math.asin(math.sin(xi_p) / math.cosh(eta_p))
    phi = chi
    for j, d_j in enumerate(delta, start=1):
        phi += d_j * math.sin(2.0 * j * chi)
    lam = math.atan2(math.sinh(eta_p), math.cos(xi_p))
    return spec.central_meridian + math.degrees(lam), math.degrees(phi)


def reproject_collection(fc: FeatureCollection, target: int = 4326) -> FeatureCollection:
    """Reproject every coordinate of fc into the target CRS (4326 only)."""
    if target != 4326 or fc.crs not in (4326, 3857, 3750):
        raise ProjectionError("no transform registered")
    if fc.crs == 4326:
        return fc
    if fc.crs == 3857:
        transform = lambda c: mercator_to_geographic(c[0], c[1])  # noqa: E731
    else:
        spec = ProjectionSpec.for_epsg(3750)
        transform = lambda c: utm_to_geographic(c[0], c[1], spec)  # noqa: E731
    features = tuple(
        Feature(map_coords(f.geometry, transform), f.attributes, f.id)
        for f in fc.features
    )
    return FeatureCollection(crs=4326, features=features)
