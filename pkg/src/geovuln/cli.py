"""Single command-line entry point for the pipeline and the server.

Subcommands mirror the processing stages: convert (shapefile -> GeoJSON),
sweep (tolerance evaluation), csv (normalize + consolidate), raster
(GeoTIFF -> pyramid file), report (reduction summary) and serve. Exit codes:
0 success, 1 usage error, 2 data error. Diagnostics go to stderr; data and
reports go to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import geojson, raster, shapefile, simplify, tabular
from .errors import GeoVulnError
from .model import Feature, FeatureCollection
from .projection import reproject_collection


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on usage errors
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise GeoVulnError(f"bad config file: {exc}") from None


def _cfg(args, config: dict, name: str, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name, default)


def _register_layer(out_path: Path, layer_id: str, kind: str, label: str,
                    metrics: list[str] | None = None) -> None:
    """Add or replace the layer entry in catalog.json next to the output."""
    catalog_path = out_path.parent / "catalog.json"
    doc = {"version": 1, "entries": []}
    if catalog_path.exists():
        doc = json.loads(catalog_path.read_text())
    entries = [e for e in doc.get("entries", []) if e["layer_id"] != layer_id]
    entry = {"layer_id": layer_id, "kind": kind, "label": label, "file": out_path.name}
    if metrics:
        entry["metrics"] = metrics
    entries.append(entry)
    doc["entries"] = sorted(entries, key=lambda e: e["layer_id"])
    catalog_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_shapefile(shp_path: Path, crs: int) -> FeatureCollection:
    shp = shp_path.read_bytes()
    shx_path = shp_path.with_suffix(".shx")
    dbf_path = shp_path.with_suffix(".dbf")
    records = shapefile.parse_shp(shp)
    if shx_path.exists():
        index = shapefile.parse_shx(shx_path.read_bytes())
        if len(index.records) != len(records):
            raise GeoVulnError("corrupt record")
    if not dbf_path.exists():
        raise GeoVulnError(f"missing attribute table {dbf_path}")
    table = shapefile.parse_dbf(dbf_path.read_bytes())
    fc, dropped = shapefile.assemble(records, table, crs)
    if dropped:
        print(f"warning: dropped {dropped} null geometries", file=sys.stderr)
    return fc


def _cmd_convert(args) -> int:
    config = _load_config(args.config)
    crs = int(_cfg(args, config, "crs", 4326))
    tol = float(_cfg(args, config, "tolerance", 0.0))
    decimals = int(_cfg(args, config, "decimals", 5))
    keep = _cfg(args, config, "keep", None)
    in_path = Path(args.infile)
    out_path = Path(args.out)

    if in_path.suffix == ".geojson":
        fc = geojson.read_geojson(in_path.read_bytes())
    else:
        fc = _read_shapefile(in_path, crs)
    fc = reproject_collection(fc, 4326)
    if keep:
        names = keep if isinstance(keep, list) else [s for s in keep.split(",") if s]
        fc = simplify.prune_attributes(fc, names)
    before = fc
    if tol > 0:
        simplified = tuple(
            Feature(simplify.simplify_geometry(f.geometry, tol), f.attributes, f.id)
            for f in fc.features
        )
        fc = FeatureCollection(fc.crs, simplified)
    fc, warnings = simplify.quantize_collection(fc, decimals)
    if warnings:
        print(f"warning: {warnings} degenerate parts kept unquantized", file=sys.stderr)
    out_path.write_bytes(geojson.write_geojson(fc, geojson.PrecisionPolicy(decimals)))
    layer_name = args.layer_id or in_path.stem
    row = simplify.reduction_report(layer_name, before, fc)
    print(simplify.format_report_table([row]), end="")
    if args.register:
        _register_layer(out_path, layer_name, args.kind, args.label or layer_name)
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    crs = int(_cfg(args, config, "crs", 4326))
    in_path = Path(args.infile)
    if in_path.suffix == ".geojson":
        fc = geojson.read_geojson(in_path.read_bytes())
    else:
        fc = reproject_collection(_read_shapefile(in_path, crs), 4326)
    tols = sorted(float(t) for t in args.tolerances.split(","))
    report = simplify.tolerance_sweep(fc, tols)
    lines = ["tolerance,vertex_count_after,serialized_size_bytes,max_deviation_observed"]
    for r in report.rows:
        lines.append(
            f"{r.tolerance},{r.vertex_count_after},{r.serialized_size_bytes},{r.max_deviation_observed}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def _cmd_csv(args) -> int:
    config = _load_config(args.config)
    deny = _cfg(args, config, "deny_patterns", None)
    patterns = tuple(deny) if deny else tabular.DEFAULT_DENY_PATTERNS
    tables = {}
    for path in args.infiles:
        p = Path(path)
        t = tabular.clean_csv(p.read_text())
        t = tabular.unpivot_double_headers(t, [args.geoid]) if args.unpivot else t
        t = tabular.drop_statistical_columns(t, patterns)
        tables[p.stem] = t
    store = tabular.consolidate(tables, args.geoid)
    if store.warnings:
        print(f"warning: {store.warnings} duplicate GEOID rows overwritten", file=sys.stderr)
    Path(args.out).write_bytes(tabular.store_to_json(store))
    return 0


def _cmd_raster(args) -> int:
    config = _load_config(args.config)
    method = _cfg(args, config, "overview_method", "average")
    grid = raster.parse_geotiff(Path(args.infile).read_bytes())
    pyramid = raster.build_overviews(grid, args.levels, method)
    out_path = Path(args.out)
    out_path.write_bytes(raster.pyramid_to_json(pyramid))
    if args.register:
        layer_id = args.layer_id or Path(args.infile).stem
        _register_layer(out_path, layer_id, "hazard_raster", args.label or layer_id)
    return 0


def _cmd_report(args) -> int:
    rows = []
    for spec in args.counts or []:
        try:
            name, unfiltered, filtered = spec.rsplit(":", 2)
            rows.append(simplify.ReductionRow(name, int(unfiltered), int(filtered)))
        except ValueError:
            raise GeoVulnError(f"bad --counts entry {spec!r}") from None
    for spec in args.pairs or []:
        try:
            name, before_path, after_path = spec.split(":", 2)
        except ValueError:
            raise GeoVulnError(f"bad --pair entry {spec!r}") from None
        before = geojson.read_geojson(Path(before_path).read_bytes())
        after = geojson.read_geojson(Path(after_path).read_bytes())
        rows.append(simplify.reduction_report(name, before, after))
    if not rows:
        raise GeoVulnError("nothing to report")
    if args.csv:
        print(simplify.format_report_csv(rows), end="")
    else:
        print(simplify.format_report_table(rows), end="")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    data_dir = args.data_dir or os.environ.get("GEOVULN_DATA_DIR")
    if not data_dir:
        raise GeoVulnError("no data directory (use --data-dir or GEOVULN_DATA_DIR)")
    port = args.port if args.port is not None else int(os.environ.get("GEOVULN_PORT", "8000"))
    app = create_app(data_dir, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="geovuln", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("convert", help="shapefile/GeoJSON -> optimized GeoJSON")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--crs", type=int, default=None, help="source EPSG code")
    p.add_argument("--tol", dest="tolerance", type=float, default=None)
    p.add_argument("--decimals", type=int, default=None)
    p.add_argument("--keep", default=None, help="comma-separated attributes to keep")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--layer-id", default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--kind", default="hazard_vector",
                   choices=["census_map", "hazard_vector", "point"])
    p.add_argument("--register", action="store_true",
                   help="record the layer in catalog.json next to the output")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("sweep", help="evaluate simplification tolerances")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--crs", type=int, default=None)
    p.add_argument("--tols", dest="tolerances", required=True,
                   help="comma-separated tolerance values")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("csv", help="normalize census CSVs into the store")
    p.add_argument("--in", dest="infiles", nargs="+", required=True)
    p.add_argument("--geoid", default="GEOID")
    p.add_argument("--unpivot", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_csv)

    p = sub.add_parser("raster", help="GeoTIFF -> internal pyramid file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--levels", type=int, default=8)
    p.add_argument("--method", dest="overview_method", default=None,
                   choices=["average", "nearest"])
    p.add_argument("--config", default=None)
    p.add_argument("--layer-id", default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--register", action="store_true")
    p.set_defaults(func=_cmd_raster)

    p = sub.add_parser("report", help="vertex reduction summary across layers")
    p.add_argument("--counts", action="append", default=None,
                   metavar="NAME:UNFILTERED:FILTERED")
    p.add_argument("--pair", dest="pairs", action="append", default=None,
                   metavar="NAME:BEFORE.geojson:AFTER.geojson")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="start the layer server")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", default=None)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except GeoVulnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
