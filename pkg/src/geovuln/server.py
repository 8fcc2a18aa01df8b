"""HTTP layer server over an immutable in-memory snapshot of processed data.

The data directory contains:
  catalog.json               registry of layers (id, kind, label, file, ...)
  *.geojson                  vector layers referenced by the catalog
  *.pyramid.json             raster pyramid files referenced by the catalog
  vulnerability_store.json   consolidated block-group metrics
  gazetteer.json             local name -> coordinate search entries

Everything is loaded once at startup; every endpoint is read-only and
idempotent, so concurrent requests need no locking.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles

from . import clustering, state
from .errors import GeoVulnError, RasterError, StateError
from .geojson import read_geojson, write_geojson, PrecisionPolicy
from .model import BBox, FeatureCollection, bbox_of, collection_bbox
from .raster import RasterPyramid, pyramid_from_json, read_window
from .tabular import Cell, Table, _cell_text, table_to_csv

VECTOR_KINDS = {"census_map", "hazard_vector", "point"}
LAYER_KINDS = VECTOR_KINDS | {"hazard_raster"}


@dataclass(frozen=True)
class CatalogEntry:
    layer_id: str
    kind: str
    label: str
    bbox: tuple[float, float, float, float] | None
    metrics: tuple[str, ...] = ()
    style: dict | None = None


class Snapshot:
    """All processed layers, tables and the gazetteer, loaded at startup."""

    def __init__(self, data_dir: str | Path) -> None:
        self.data_dir = Path(data_dir)
        self.entries: list[CatalogEntry] = []
        self.vectors: dict[str, FeatureCollection] = {}
        self.rasters: dict[str, RasterPyramid] = {}
        self.cluster_indexes: dict[str, clustering.ClusterIndex] = {}
        self.datasets: dict[str, dict] = {}
        self.gazetteer: list[dict] = []
        self._load()

    def _load(self) -> None:
        catalog_path = self.data_dir / "catalog.json"
        entries = []
        if catalog_path.exists():
            doc = json.loads(catalog_path.read_text())
            entries = doc.get("entries", [])
        for e in entries:
            layer_id = e["layer_id"]
            kind = e["kind"]
            if kind not in LAYER_KINDS:
                raise GeoVulnError(f"unknown layer kind {kind}")
            path = self.data_dir / e["file"]
            bbox = None
            metrics = tuple(e.get("metrics", ()))
            if kind in VECTOR_KINDS:
                fc = read_geojson(path.read_bytes())
                self.vectors[layer_id] = fc
                box = collection_bbox(fc)
                if box:
                    bbox = (box.min_x, box.min_y, box.max_x, box.max_y)
                if kind == "point":
                    points = [
                        (f.id if f.id is not None else str(i), *f.geometry.coords)
                        for i, f in enumerate(fc.features)
                        if f.geometry.kind == "Point"
                    ]
                    self.cluster_indexes[layer_id] = clustering.build_index(points)
            else:
                pyr = pyramid_from_json(path.read_bytes())
                self.rasters[layer_id] = pyr
                ext = pyr.base.extent()
                bbox = (ext.min_x, ext.min_y, ext.max_x, ext.max_y)
            self.entries.append(
                CatalogEntry(layer_id, kind, e.get("label", layer_id), bbox, metrics, e.get("style"))
            )
        store_path = self.data_dir / "vulnerability_store.json"
        if store_path.exists():
            doc = json.loads(store_path.read_text())
            self.datasets = doc.get("datasets", {})
        gaz_path = self.data_dir / "gazetteer.json"
        if gaz_path.exists():
            self.gazetteer = json.loads(gaz_path.read_text()).get("entries", [])


def _parse_bbox(raw: str) -> BBox:
    try:
        w, s, e, n = (float(v) for v in raw.split(","))
        return BBox(w, s, e, n)
    except (ValueError, GeoVulnError):
        raise HTTPException(status_code=400, detail="malformed bbox") from None


def _sort_rows(
    rows: list[tuple[str, list[Cell]]], col_idx: int | None, direction: str
) -> list[tuple[str, list[Cell]]]:
    """Sort with nulls last in both directions, ties by GEOID ascending."""
    rows = sorted(rows, key=lambda r: r[0])
    if col_idx is None:
        return rows

    def value(r):
        return r[0] if col_idx == -1 else r[1][col_idx]

    def key(r):
        v = value(r)
        if isinstance(v, bool):
            return (1, str(v).lower())
        if isinstance(v, (int, float)):
            return (0, float(v))
        return (1, str(v))

    non_null = [r for r in rows if value(r) is not None]
    nulls = [r for r in rows if value(r) is None]
    non_null.sort(key=key, reverse=(direction == "desc"))
    if direction == "desc":
        # Restore GEOID-ascending tie order broken by reverse sort.
        non_null = _stable_desc(non_null, key)
    return non_null + nulls


def _stable_desc(rows, key):
    out = []
    i = 0
    while i < len(rows):
        j = i
        while j < len(rows) and key(rows[j]) == key(rows[i]):
            j += 1
        out.extend(sorted(rows[i:j], key=lambda r: r[0]))
        i = j
    return out


def _query_dataset(
    snapshot: Snapshot,
    dataset_id: str,
    sort: str | None,
    direction: str,
    search: str | None,
) -> tuple[list[str], list[tuple[str, list[Cell]]]]:
    ds = snapshot.datasets.get(dataset_id)
    if ds is None:
        raise HTTPException(status_code=404, detail="dataset not found")
    metrics = list(ds["metrics"])
    rows = [(geoid, list(vals)) for geoid, vals in ds["records"].items()]
    if search:
        needle = search.lower()
        rows = [
            r
            for r in rows
            if needle in r[0].lower()
            or any(needle in _cell_text(v).lower() for v in r[1])
        ]
    col_idx: int | None = None
    if sort is not None:
        if sort == "GEOID":
            col_idx = -1
        elif sort in metrics:
            col_idx = metrics.index(sort)
        else:
            raise HTTPException(status_code=400, detail="unknown sort column")
    if direction not in ("asc", "desc"):
        raise HTTPException(status_code=400, detail="invalid sort direction")
    return metrics, _sort_rows(rows, col_idx, direction)


def create_app(data_dir: str | Path, static_dir: str | Path | None = None) -> FastAPI:
    snapshot = Snapshot(data_dir)
    app = FastAPI(title="geovuln layer server")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET"], allow_headers=["*"]
    )
    app.state.snapshot = snapshot

    @app.get("/api/catalog")
    def handle_catalog():
        return {
            "entries": [
                {
                    "layer_id": e.layer_id,
                    "kind": e.kind,
                    "label": e.label,
                    "bbox": list(e.bbox) if e.bbox else None,
                    "metrics": list(e.metrics),
                    "style": e.style,
                }
                for e in snapshot.entries
            ]
        }

    @app.get("/api/layers/{layer_id}")
    def handle_layer(layer_id: str, bbox: str | None = None):
        fc = snapshot.vectors.get(layer_id)
        if fc is None:
            raise HTTPException(status_code=404, detail="layer not found")
        if bbox is not None:
            box = _parse_bbox(bbox)
            feats = tuple(f for f in fc.features if bbox_of(f.geometry).intersects(box))
            fc = FeatureCollection(fc.crs, feats)
        return Response(content=write_geojson(fc, PrecisionPolicy(5)), media_type="application/geo+json")

    @app.get("/api/raster/{layer_id}/window")
    def handle_raster_window(layer_id: str, bbox: str, max_px: int = Query(512, ge=1)):
        pyr = snapshot.rasters.get(layer_id)
        if pyr is None:
            raise HTTPException(status_code=404, detail="layer not found")
        box = _parse_bbox(bbox)
        try:
            win = read_window(pyr, box, max_px)
        except RasterError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return {
            "width": win.width,
            "height": win.height,
            "bbox": [win.bbox.min_x, win.bbox.min_y, win.bbox.max_x, win.bbox.max_y],
            "nodata": win.nodata,
            "values": win.values.flatten().tolist(),
            "level_used": win.level_used,
        }

    @app.get("/api/points/{layer_id}/clusters")
    def handle_clusters(layer_id: str, zoom: int, bbox: str | None = None):
        index = snapshot.cluster_indexes.get(layer_id)
        if index is None:
            if layer_id in snapshot.vectors or layer_id in snapshot.rasters:
                raise HTTPException(status_code=400, detail="not a point layer")
            raise HTTPException(status_code=404, detail="layer not found")
        box = _parse_bbox(bbox) if bbox else BBox(-180, -90, 180, 90)
        try:
            nodes = clustering.clusters_at(index, zoom, box)
        except GeoVulnError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return [
            {
                "id": n.id,
                "lon": n.lon,
                "lat": n.lat,
                "count": n.count,
                "point_id": n.point_id,
            }
            for n in nodes
        ]

    @app.get("/api/table/{dataset_id}")
    def handle_table(
        dataset_id: str,
        sort: str | None = None,
        dir: str = "asc",
        search: str | None = None,
        page: int = Query(0, ge=0),
        page_size: int = Query(100, ge=1, le=1000),
    ):
        metrics, rows = _query_dataset(snapshot, dataset_id, sort, dir, search)
        start = page * page_size
        return {
            "total_matching": len(rows),
            "columns": ["GEOID"] + metrics,
            "rows": [[geoid] + vals for geoid, vals in rows[start : start + page_size]],
        }

    @app.get("/api/table/{dataset_id}/export")
    def handle_export(
        dataset_id: str,
        sort: str | None = None,
        dir: str = "asc",
        search: str | None = None,
    ):
        metrics, rows = _query_dataset(snapshot, dataset_id, sort, dir, search)
        table = Table(
            tuple(["GEOID"] + metrics),
            tuple(tuple([geoid] + vals) for geoid, vals in rows),
        )
        return PlainTextResponse(content=table_to_csv(table), media_type="text/csv")

    @app.get("/api/search")
    def handle_search(q: str = ""):
        if not q.strip():
            raise HTTPException(status_code=400, detail="empty query")
        needle = q.strip().lower()
        scored = []
        for e in snapshot.gazetteer:
            name = str(e["name"])
            low = name.lower()
            if low.startswith(needle):
                scored.append((0, name, e))
            elif needle in low:
                scored.append((1, name, e))
        scored.sort(key=lambda t: (t[0], t[1]))
        return [
            {"name": t[2]["name"], "lon": t[2]["lon"], "lat": t[2]["lat"]}
            for t in scored[:10]
        ]

    @app.get("/api/state/decode")
    def handle_state_decode(token: str):
        try:
            decoded = state.decode_state(token)
        except StateError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return JSONResponse(content=state.state_to_doc(decoded))

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="static")

    return app
