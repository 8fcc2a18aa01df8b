import random
import struct

import pytest

from geovuln.errors import GeoVulnError, ShapefileError
from geovuln.model import FeatureCollection, Feature, linestring, point
from geovuln.shapefile import (
    assemble,
    parse_dbf,
    parse_shp,
    parse_shx,
    read_triplet,
)

import shapeio
from conftest import random_collection


def test_parse_shx_two_records():
    fc = random_collection(random.Random(1), "Point", 2)
    shp, shx, _ = shapeio.write_triplet(fc)
    index = parse_shx(shx)
    assert len(index.records) == 2
    assert index.records[0][0] == 50
    # next offset = 50 + len1 + 4 header words
    assert index.records[1][0] == 50 + index.records[0][1] + 4


def test_parse_shx_empty():
    shp, shx = shapeio.write_shp_shx([])
    assert parse_shx(shx).records == ()


def test_parse_shx_bad_magic():
    shp, shx = shapeio.write_shp_shx([])
    bad = struct.pack(">i", 1234) + shx[4:]
    with pytest.raises(ShapefileError, match="not a shapefile index"):
        parse_shx(bad)


def test_parse_shx_truncated():
    _, shx = shapeio.write_shp_shx([point(0, 0), point(1, 1)])
    with pytest.raises(ShapefileError, match="unexpected end of file"):
        parse_shx(shx[:-4])


def test_parse_shp_point():
    shp, _ = shapeio.write_shp_shx([point(-157.0, 21.0)])
    records = parse_shp(shp)
    assert records == [(1, point(-157.0, 21.0))]


def test_parse_shp_polygon_closed_square():
    from geovuln.model import polygon

    ring = [(0, 0), (4, 0), (4, 4), (0, 4), (0, 0)][::-1]  # clockwise
    g = polygon([ring])
    shp, _ = shapeio.write_shp_shx([g])
    (num, parsed), = parse_shp(shp)
    assert parsed.kind == "Polygon"
    assert len(parsed.coords[0]) == 5
    assert parsed.coords[0][0] == parsed.coords[0][-1]


def test_parse_shp_null_record():
    shp, _ = shapeio.write_shp_shx([point(0, 0), None])
    records = parse_shp(shp)
    assert records[1] == (2, None)


def test_parse_shp_reclose_open_ring():
    # Build a polygon record whose ring omits the closing point.
    open_ring = [(0.0, 0.0), (4.0, 4.0), (4.0, 0.0)]
    content = struct.pack("<i4dii", 5, 0, 0, 4, 4, 1, 3)
    content += struct.pack("<i", 0)
    for x, y in open_ring:
        content += struct.pack("<dd", x, y)
    body = struct.pack(">ii", 1, len(content) // 2) + content
    header = struct.pack(">i5i", 9994, 0, 0, 0, 0, 0)
    header += struct.pack(">i", (100 + len(body)) // 2)
    header += struct.pack("<ii", 1000, 5)
    header += struct.pack("<8d", 0, 0, 4, 4, 0, 0, 0, 0)
    (n, g), = parse_shp(header + body)
    assert g.coords[0][0] == g.coords[0][-1]
    assert len(g.coords[0]) == 4


def test_parse_shp_unsupported_type():
    shp, _ = shapeio.write_shp_shx([point(0, 0)])
    bad = shp[:32] + struct.pack("<i", 11) + shp[36:]
    with pytest.raises(ShapefileError, match="unsupported shape type 11"):
        parse_shp(bad)


def test_parse_shp_corrupt_record_length():
    shp, _ = shapeio.write_shp_shx([point(0, 0)])
    # shrink the record content-length header
    bad = bytearray(shp)
    bad[104:108] = struct.pack(">i", 9)
    with pytest.raises(ShapefileError):
        parse_shp(bytes(bad))


def test_parse_dbf_fixture():
    dbf = shapeio.write_dbf([{"NAME": "Hilo", "POP": 43263}])
    table = parse_dbf(dbf)
    assert [f.name for f in table.field_descriptors] == ["NAME", "POP"]
    assert table.rows == ({"NAME": "Hilo", "POP": 43263},)


def test_parse_dbf_blank_numeric_is_null():
    dbf = shapeio.write_dbf([{"POP": None}, {"POP": 5}])
    assert parse_dbf(dbf).rows == ({"POP": None}, {"POP": 5})


def test_parse_dbf_deleted_row_excluded():
    dbf = bytearray(shapeio.write_dbf([{"POP": 1}, {"POP": 2}]))
    header_size = struct.unpack("<H", dbf[8:10])[0]
    dbf[header_size] = 0x2A  # mark first row deleted
    table = parse_dbf(bytes(dbf))
    assert table.rows == ({"POP": 2},)


def test_parse_dbf_missing_terminator():
    dbf = bytearray(shapeio.write_dbf([{"POP": 1}]))
    idx = dbf.index(0x0D, 32)
    dbf[idx] = 0x00
    with pytest.raises(ShapefileError, match="malformed DBF header"):
        parse_dbf(bytes(dbf))


def test_parse_dbf_truncated():
    dbf = shapeio.write_dbf([{"POP": 1}, {"POP": 2}])
    with pytest.raises(ShapefileError, match="truncated DBF"):
        parse_dbf(dbf[:-20])


def test_parse_dbf_logical_and_date():
    dbf = shapeio.write_dbf([{"OK": True}, {"OK": False}, {"OK": None}])
    assert [r["OK"] for r in parse_dbf(dbf).rows] == [True, False, None]


def test_assemble_pairs_in_order():
    recs = [(1, point(0, 0)), (2, point(1, 1)), (3, point(2, 2))]
    dbf = parse_dbf(shapeio.write_dbf([{"N": i} for i in range(3)]))
    fc, warnings = assemble(recs, dbf, 4326)
    assert warnings == 0
    assert [f.attributes["N"] for f in fc.features] == [0, 1, 2]


def test_assemble_drops_null_with_warning():
    recs = [(1, point(0, 0)), (2, None), (3, point(2, 2))]
    dbf = parse_dbf(shapeio.write_dbf([{"N": i} for i in range(3)]))
    fc, warnings = assemble(recs, dbf, 4326)
    assert len(fc.features) == 2
    assert warnings == 1


def test_assemble_count_mismatch():
    recs = [(1, point(0, 0)), (2, point(1, 1)), (3, point(2, 2))]
    dbf = parse_dbf(shapeio.write_dbf([{"N": i} for i in range(2)]))
    with pytest.raises(ShapefileError, match=r"\(3 vs 2\)"):
        assemble(recs, dbf, 4326)


@pytest.mark.parametrize("kind", ["Point", "LineString", "Polygon"])
def test_round_trip(kind, rng):
    for _ in range(10):
        fc = random_collection(rng, kind, rng.randint(1, 8))
        shp, shx, dbf = shapeio.write_triplet(fc)
        out, warnings = read_triplet(shp, shx, dbf, 4326)
        assert warnings == 0
        assert len(out.features) == len(fc.features)
        for got, want in zip(out.features, fc.features):
            assert got.geometry == want.geometry  # bit-equal coordinates
            assert got.attributes == dict(want.attributes)


def test_shx_shp_record_counts_agree(rng):
    fc = random_collection(rng, "Polygon", 7)
    shp, shx, _ = shapeio.write_triplet(fc)
    assert len(parse_shx(shx).records) == len(parse_shp(shp))


def test_fuzz_never_crashes(rng):
    fc = random_collection(rng, "Polygon", 3)
    shp, shx, dbf = shapeio.write_triplet(fc)
    corpora = [shp, shx, dbf]
    for i in range(2000):
        base = bytearray(corpora[i % 3])
        for _ in range(rng.randint(1, 8)):
            base[rng.randrange(len(base))] = rng.randrange(256)
        if rng.random() < 0.3:
            base = base[: rng.randrange(len(base))]
        for parser in (parse_shp, parse_shx, parse_dbf):
            try:
                parser(bytes(base))
            except GeoVulnError:
                pass
