"""Zoom-dependent grid clustering of point features.

Greedy supercluster-style clustering: at each zoom, points are projected to
world pixel coordinates (Web Mercator, 256 * 2^z world size), bucketed into
cells of radius_px, and 8-connected occupied cells merge into one cluster at
the member centroid. At max_zoom only exactly coincident points stay merged,
so distinct points always separate back into singletons.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeoVulnError
from .model import BBox

WORLD_TILE = 256


@dataclass(frozen=True)
class ClusterNode:
    id: str
    lon: float
    lat: float
    count: int
    members: tuple[int, ...]  # indices into the source point list
    point_id: str | None = None  # original id when the node is a singleton


@dataclass(frozen=True)
class ClusterIndex:
    points: tuple[tuple[str, float, float], ...]  # (id, lon, lat)
    radius_px: float
    max_zoom: int
    zoom_levels: tuple[tuple[ClusterNode, ...], ...]


def _world_px(lon: float, lat: float, zoom: int) -> tuple[float, float]:
    scale = WORLD_TILE * (2**zoom)
    x = (lon + 180.0) / 360.0 * scale
    sin_lat = max(-0.9999, min(0.9999, math.sin(math.radians(lat))))
    y = (0.5 - math.log((1 + sin_lat) / (1 - sin_lat)) / (4 * math.pi)) * scale
    return x, y


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _nodes_from_groups(points, groups: list[list[int]], zoom: int) -> tuple[ClusterNode, ...]:
    nodes = []
    for members in sorted(groups, key=min):
        members = sorted(members)
        lon = sum(points[m][1] for m in members) / len(members)
        lat = sum(points[m][2] for m in members) / len(members)
        if len(members) == 1:
            pid = points[members[0]][0]
            nodes.append(ClusterNode(pid, lon, lat, 1, tuple(members), pid))
        else:
            nodes.append(
                ClusterNode(f"{zoom}-{members[0]}", lon, lat, len(members), tuple(members))
            )
    return tuple(nodes)


def build_index(points, radius_px: float = 40.0, max_zoom: int = 16) -> ClusterIndex:
    """Cluster the (id, lon, lat) points at every zoom 0..max_zoom."""
    pts = tuple((str(pid), float(lon), float(lat)) for pid, lon, lat in points)
    for _, lon, lat in pts:
        if not (-180.0 <= lon <= 180.0 and -90.0 <= lat <= 90.0):
            raise GeoVulnError(f"point outside EPSG:4326 domain: ({lon}, {lat})")
    levels = []
    n = len(pts)
    for zoom in range(max_zoom + 1):
        if n == 0:
            levels.append(())
            continue
        if zoom == max_zoom:
            # Only exactly coincident points remain merged at max zoom.
            by_coord: dict[tuple[float, float], list[int]] = {}
            for i, (_, lon, lat) in enumerate(pts):
                by_coord.setdefault((lon, lat), []).append(i)
            levels.append(_nodes_from_groups(pts, list(by_coord.values()), zoom))
            continue
        cells: dict[tuple[int, int], list[int]] = {}
        for i, (_, lon, lat) in enumerate(pts):
            x, y = _world_px(lon, lat, zoom)
            cells.setdefault((int(x // radius_px), int(y // radius_px)), []).append(i)
        uf = _UnionFind(n)
        for (cx, cy), members in cells.items():
            seed = members[0]
            for m in members[1:]:
                uf.union(seed, m)
            for dx in (0, 1):
                for dy in (-1, 0, 1):
                    if dx == 0 and dy <= 0:
                        continue
                    other = cells.get((cx + dx, cy + dy))
                    if other:
                        uf.union(seed, other[0])
        groups: dict[int, list[int]] = {}
        for i in range(n):
            groups.setdefault(uf.find(i), []).append(i)
        levels.append(_nodes_from_groups(pts, list(groups.values()), zoom))
    return ClusterIndex(pts, radius_px, max_zoom, tuple(levels))


def clusters_at(index: ClusterIndex, zoom: int, bbox: BBox) -> list[ClusterNode]:
    """Nodes whose centroid lies inside bbox, in deterministic id order."""
    if not (0 <= zoom <= index.max_zoom):
        raise GeoVulnError("zoom out of range")
    return [
        n for n in index.zoom_levels[zoom] if bbox.contains_point(n.lon, n.lat)
    ]


def expand_cluster(index: ClusterIndex, cluster_id: str) -> list[ClusterNode]:
    """Children at the first zoom where the cluster splits; singletons and
    never-splitting coincident clusters return themselves."""
    found = None
    found_zoom = -1
    for zoom, nodes in enumerate(index.zoom_levels):
        for n in nodes:
            if n.id == cluster_id:
                found = n
                found_zoom = zoom
                break
        if found:
            break
    if found is None:
        raise GeoVulnError("no such cluster")
    if found.count == 1:
        return [found]
    member_set = set(found.members)
    for zoom in range(found_zoom + 1, index.max_zoom + 1):
        children = [
            n for n in index.zoom_levels[zoom] if member_set.issuperset(n.members)
        ]
        covered = sum(n.count for n in children)
        if covered == found.count and len(children) > 1:
            return children
    # Coincident members never split; return the node at max zoom.
    return [
        n for n in index.zoom_levels[index.max_zoom] if member_set.issuperset(n.members)
    ]
