"""Census CSV normalization and consolidation into the vulnerability store.

The CSV reader tracks quoting: an unquoted numeric-looking cell becomes a
number, a quoted cell stays text unless it is a thousands-separated numeral
(which must be quoted to survive CSV at all). Identifier columns like GEOID
therefore keep their digits as text when quoted, and the export writer quotes
any text cell that would otherwise re-parse as a number.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import TabularError

Cell = str | int | float | None

_PLAIN_NUMBER = re.compile(r"^[+-]?\d+(\.\d+)?$")
_GROUPED_NUMBER = re.compile(r"^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$")
_SUFFIX = re.compile(r"^(.*)_([A-Za-z0-9]+)$")

DEFAULT_DENY_PATTERNS = (r"(?i).*_MOE$", r"(?i).*_EST$", r"(?i)^MarginOfError.*")


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]


@dataclass(frozen=True)
class VulnerabilityStore:
    # dataset_id -> {"label": str, "metrics": [...], "records": {geoid: [...]}}
    datasets: dict
    warnings: int = 0


def _split_records(text: str) -> list[list[tuple[str, bool]]]:
    """RFC 4180 tokenizer returning (cell_text, was_quoted) pairs per record."""
    records: list[list[tuple[str, bool]]] = []
    cell: list[str] = []
    row: list[tuple[str, bool]] = []
    quoted = False
    in_quotes = False
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < n and text[i + 1] == '"':
                    cell.append('"')
                    i += 1
                else:
                    in_quotes = False
            else:
                cell.append(ch)
        elif ch == '"' and all(c.isspace() for c in cell):
            in_quotes = True
            quoted = True
        elif ch == ",":
            row.append(("".join(cell), quoted))
            cell, quoted = [], False
        elif ch == "\n" or ch == "\r":
            if ch == "\r" and i + 1 < n and text[i + 1] == "\n":
                i += 1
            row.append(("".join(cell), quoted))
            records.append(row)
            cell, quoted, row = [], False, []
        else:
            cell.append(ch)
        i += 1
    if cell or row:
        row.append(("".join(cell), quoted))
        records.append(row)
    return records


def _clean_text(s: str, quoted: bool) -> str:
    kept = []
    for ch in s:
        if ord(ch) < 32 or ord(ch) == 127:
            if ch == "\t" and quoted:
                kept.append(ch)
            continue
        kept.append(ch)
    return "".join(kept).strip()


def _parse_cell(raw: str, quoted: bool) -> Cell:
    s = _clean_text(raw, quoted)
    if not s:
        return None
    if quoted:
        if _GROUPED_NUMBER.match(s):
            s2 = s.replace(",", "")
            return float(s2) if "." in s2 else int(s2)
        return s
    if _PLAIN_NUMBER.match(s):
        return float(s) if "." in s else int(s)
    return s


def clean_csv(text: str) -> Table:
    """Parse and normalize a CSV document into a Table."""
    if not text.strip():
        raise TabularError("empty CSV")
    records = _split_records(text)
    header = [_clean_text(c, q) or c for c, q in records[0]]
    seen = set()
    for name in header:
        if name in seen:
            raise TabularError(f"duplicate column {name}")
        seen.add(name)
    rows = []
    for idx, rec in enumerate(records[1:], start=2):
        if len(rec) == 1 and rec[0] == ("", False):
            continue  # trailing blank line
        if len(rec) != len(header):
            raise TabularError(f"row {idx} has {len(rec)} cells, expected {len(header)}")
        rows.append(tuple(_parse_cell(c, q) for c, q in rec))
    return Table(tuple(header), tuple(rows))


def _cell_text(v: Cell) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def table_to_csv(t: Table) -> str:
    """RFC 4180 writer; text cells that would re-parse as numbers are quoted."""

    def enc(v: Cell) -> str:
        if v is None:
            # explicit empty field, so an all-null row is not a blank line
            return '""'
        s = _cell_text(v)
        needs_quote = any(c in s for c in ',"\r\n')
        if isinstance(v, str) and (_PLAIN_NUMBER.match(s) or _GROUPED_NUMBER.match(s)):
            needs_quote = True
        if needs_quote:
            return '"' + s.replace('"', '""') + '"'
        return s

    lines = [",".join(enc(c) for c in t.columns)]
    for row in t.rows:
        lines.append(",".join(enc(v) for v in row))
    return "\r\n".join(lines) + "\r\n"


def unpivot_double_headers(t: Table, id_columns: list[str]) -> Table:
    """Melt suffix-differentiated column families into per-group rows."""
    for c in id_columns:
        if c not in t.columns:
            raise TabularError(f"unknown id column {c}")
    suffixed: dict[str, dict[str, str]] = {}  # base -> token -> column
    carried: list[str] = []
    tokens_order: list[str] = []
    for col in t.columns:
        if col in id_columns:
            continue
        m = _SUFFIX.match(col)
        if m:
            base, token = m.group(1), m.group(2)
            suffixed.setdefault(base, {})[token] = col
            if token not in tokens_order:
                tokens_order.append(token)
        else:
            carried.append(col)
    for base in suffixed:
        if base in carried or base in id_columns:
            raise TabularError(f"ambiguous column family {base}")
    if not suffixed:
        return t
    bases = [b for b in dict.fromkeys(
        _SUFFIX.match(c).group(1) for c in t.columns if c not in id_columns and _SUFFIX.match(c)
    )]
    out_columns = tuple(id_columns) + tuple(carried) + ("group",) + tuple(bases)
    col_index = {c: i for i, c in enumerate(t.columns)}
    out_rows = []
    for row in t.rows:
        for token in tokens_order:
            rec = [row[col_index[c]] for c in id_columns]
            rec += [row[col_index[c]] for c in carried]
            rec.append(token)
            for base in bases:
                col = suffixed[base].get(token)
                rec.append(row[col_index[col]] if col else None)
            out_rows.append(tuple(rec))
    return Table(out_columns, tuple(out_rows))


def drop_statistical_columns(t: Table, patterns=DEFAULT_DENY_PATTERNS) -> Table:
    """Remove estimator/margin-of-error style columns by configured patterns."""
    regexes = [re.compile(p) for p in patterns]
    keep = [c for c in t.columns if not any(r.match(c) for r in regexes)]
    if not keep:
        raise TabularError("no data columns remain")
    if len(keep) == len(t.columns):
        return t
    idx = [i for i, c in enumerate(t.columns) if c in keep]
    return Table(tuple(keep), tuple(tuple(row[i] for i in idx) for row in t.rows))


def consolidate(tables: dict[str, Table], geoid_column: str = "GEOID",
                labels: dict[str, str] | None = None) -> VulnerabilityStore:
    """Merge normalized tables into the single keyed vulnerability store."""
    datasets = {}
    warnings = 0
    for dataset_id, table in tables.items():
        if geoid_column not in table.columns:
            raise TabularError(f"dataset {dataset_id} lacks GEOID")
        gi = table.columns.index(geoid_column)
        metrics = [c for i, c in enumerate(table.columns) if i != gi]
        records: dict[str, list[Cell]] = {}
        for row in table.rows:
            geoid = _cell_text(row[gi])
            if geoid in records:
                warnings += 1
            records[geoid] = [v for i, v in enumerate(row) if i != gi]
        datasets[dataset_id] = {
            "label": (labels or {}).get(dataset_id, dataset_id),
            "metrics": metrics,
            "records": records,
        }
    return VulnerabilityStore(datasets, warnings)


def store_to_json(store: VulnerabilityStore) -> bytes:
    doc = {
        "version": 1,
        "datasets": {
            did: {
                "label": ds["label"],
                "metrics": ds["metrics"],
                "records": {g: ds["records"][g] for g in sorted(ds["records"])},
            }
            for did, ds in sorted(store.datasets.items())
        },
    }
    return json.dumps(doc, separators=(",", ":"), sort_keys=True).encode("utf-8")


def store_from_json(data: bytes) -> VulnerabilityStore:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise TabularError(f"bad store file: {exc}") from None
    if doc.get("version") != 1:
        raise TabularError("unsupported store version")
    return VulnerabilityStore(doc["datasets"])
