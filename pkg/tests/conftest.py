"""Shared fixture generators."""
from __future__ import annotations

import math
import random

import pytest

from geovuln.model import (
    Feature,
    FeatureCollection,
    Geometry,
    linestring,
    point,
    polygon,
)

HAWAII_BBOX = (-161.0, 18.0, -154.0, 23.0)


def ring_area(ring) -> float:
    area = 0.0
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        area += x1 * y2 - x2 * y1
    return area / 2.0


def oriented_ring(pts, clockwise: bool):
    """Close pts and force the requested orientation."""
    ring = list(pts)
    if ring[0] != ring[-1]:
        ring.append(ring[0])
    if (ring_area(ring) < 0) != clockwise:
        ring = ring[::-1]
    return tuple(ring)


def random_convex_ring(rng: random.Random, cx: float, cy: float, radius: float,
                       n: int, clockwise: bool):
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n))
    pts = [
        (cx + radius * math.cos(a) * rng.uniform(0.7, 1.0),
         cy + radius * math.sin(a) * rng.uniform(0.7, 1.0))
        for a in angles
    ]
    return oriented_ring(pts, clockwise)


def random_polygon_with_hole(rng: random.Random) -> Geometry:
    cx = rng.uniform(HAWAII_BBOX[0] + 1, HAWAII_BBOX[2] - 1)
    cy = rng.uniform(HAWAII_BBOX[1] + 1, HAWAII_BBOX[3] - 1)
    outer = random_convex_ring(rng, cx, cy, 0.5, rng.randint(5, 12), clockwise=True)
    rings = [outer]
    if rng.random() < 0.5:
        rings.append(random_convex_ring(rng, cx, cy, 0.05, 5, clockwise=False))
    return polygon(rings)


def random_geometry(rng: random.Random, kind: str) -> Geometry:
    if kind == "Point":
        return point(rng.uniform(*HAWAII_BBOX[::2]), rng.uniform(*HAWAII_BBOX[1::2]))
    if kind == "LineString":
        x = rng.uniform(HAWAII_BBOX[0], HAWAII_BBOX[2] - 1)
        y = rng.uniform(HAWAII_BBOX[1], HAWAII_BBOX[3] - 1)
        pts = []
        for _ in range(rng.randint(2, 20)):
            pts.append((x, y))
            x += rng.uniform(-0.1, 0.1)
            y += rng.uniform(-0.1, 0.1)
        return linestring(pts)
    return random_polygon_with_hole(rng)


def random_collection(rng: random.Random, kind: str, n: int) -> FeatureCollection:
    features = []
    for i in range(n):
        attrs = {
            "NAME": rng.choice(["Hilo", "Kona", "Lihue", "Wailuku", "Kailua"]),
            "POP": rng.randint(0, 100000),
            "FLAG": rng.random() < 0.5,
        }
        features.append(Feature(random_geometry(rng, kind), attrs, str(i + 1)))
    return FeatureCollection(4326, tuple(features))


def dense_circle_ring(n: int = 360, radius: float = 1.0, cx: float = -157.0,
                      cy: float = 21.0):
    pts = [
        (cx + radius * math.cos(2 * math.pi * i / n),
         cy + radius * math.sin(2 * math.pi * i / n))
        for i in range(n)
    ]
    pts.append(pts[0])
    return tuple(pts)


def noisy_coastline(rng: random.Random, n: int) -> Geometry:
    """Smooth low-frequency curve with small noise, n vertices."""
    pts = []
    for i in range(n):
        t = i / n * 2 * math.pi
        r = 2.0 + 0.3 * math.sin(5 * t) + 0.1 * math.sin(17 * t)
        r += rng.uniform(-0.0005, 0.0005)
        pts.append((-157.0 + r * math.cos(t), 20.5 + 0.8 * r * math.sin(t)))
    return linestring(pts)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240817)
