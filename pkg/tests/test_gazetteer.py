"""Gazetteer parsing, merging, and great-circle distance."""

import numpy as np
import pytest

from topomatch.errors import InputError
from topomatch.gazetteer import (
    GazetteerEntry,
    haversine_km,
    load_gazetteer,
    merge_gazetteers,
)


def _write(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")


class TestLoad:
    def test_basic(self, tmp_path):
        path = tmp_path / "gz.tsv"
        _write(path, [
            ("A1", "Foo", 10.0, 20.0, "Foo"),
            ("A1", "Foo", 10.0, 20.0, "Fooville"),
            ("B2", "Bar", -5.0, 30.0, "Bar"),
        ])
        gz = load_gazetteer(path)
        assert len(gz) == 2
        assert gz.entries["A1"].altnames == {"Foo", "Fooville"}
        assert gz.num_altnames == 3
        assert gz.ids_for("Fooville") == ("A1",)

    def test_duplicate_rows_collapse(self, tmp_path):
        path = tmp_path / "gz.tsv"
        _write(path, [
            ("A1", "Foo", 10.0, 20.0, "Foo"),
            ("A1", "Foo", 10.0, 20.0, "Foo"),
        ])
        gz = load_gazetteer(path)
        assert gz.entries["A1"].altnames == {"Foo"}

    def test_out_of_range_latitude(self, tmp_path):
        path = tmp_path / "gz.tsv"
        _write(path, [("A1", "Foo", 91.0, 0.0, "Foo")])
        with pytest.raises(InputError, match="line 1"):
            load_gazetteer(path)

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "gz.tsv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("A1\tFoo\t1.0\t2.0\tFoo\n")
            fh.write("broken row\n")
        with pytest.raises(InputError, match="line 2"):
            load_gazetteer(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            load_gazetteer(tmp_path / "nope.tsv")

    def test_shared_altname_maps_to_both_ids(self, tmp_path):
        path = tmp_path / "gz.tsv"
        _write(path, [
            ("A1", "Springfield", 10.0, 20.0, "Springfield"),
            ("B2", "Springfield", -5.0, 30.0, "Springfield"),
        ])
        gz = load_gazetteer(path)
        assert gz.ids_for("Springfield") == ("A1", "B2")

    def test_caseless_lookup(self, tmp_path):
        path = tmp_path / "gz.tsv"
        _write(path, [("A1", "Manchester", 53.5, -2.2, "Manchester")])
        gz = load_gazetteer(path)
        assert gz.ids_for_caseless("manchester") == ("A1",)
        assert gz.altnames_caseless("MANCHESTER") == ("Manchester",)


class TestMerge:
    def test_union_and_first_coords(self, tmp_path):
        p1, p2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
        _write(p1, [("A1", "Foo", 10.0, 20.0, "Foo"), ("B2", "Bar", 0.0, 0.0, "Bar")])
        _write(p2, [("A1", "Foo", 49.0, 99.0, "Phou"), ("C3", "Baz", 1.0, 1.0, "Baz")])
        merged = merge_gazetteers([load_gazetteer(p1), load_gazetteer(p2)])
        assert len(merged) == 3
        assert merged.entries["A1"].lat == 10.0
        assert merged.entries["A1"].altnames == {"Foo", "Phou"}

    def test_empty_merge_errors(self):
        with pytest.raises(InputError):
            merge_gazetteers([])


class TestEntryValidation:
    def test_altnames_required(self):
        with pytest.raises(ValueError):
            GazetteerEntry("X", "x", 0.0, 0.0, frozenset())


class TestHaversine:
    def test_identical_points(self):
        assert haversine_km(12.3, 45.6, 12.3, 45.6) == 0.0

    def test_london_paris(self):
        # independent great-circle oracle: spherical law of cosines gives
        # 343.47 km for these coordinates on a 6371 km sphere
        d = haversine_km(51.5074, -0.1278, 48.8566, 2.3522)
        assert abs(d - 343.5) < 0.5

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            lat1, lat2 = rng.uniform(-90, 90, 2)
            lon1, lon2 = rng.uniform(-180, 180, 2)
            assert haversine_km(lat1, lon1, lat2, lon2) == pytest.approx(
                haversine_km(lat2, lon2, lat1, lon1), abs=1e-12
            )

    def test_triangle_inequality(self):
        rng = np.random.default_rng(4)
        for _ in range(300):
            pts = [(rng.uniform(-90, 90), rng.uniform(-180, 180)) for _ in range(3)]
            ab = haversine_km(*pts[0], *pts[1])
            bc = haversine_km(*pts[1], *pts[2])
            ac = haversine_km(*pts[0], *pts[2])
            assert ac <= ab + bc + 1e-9

    def test_antipodal_is_half_circumference(self):
        d = haversine_km(0.0, 0.0, 0.0, 180.0)
        assert d == pytest.approx(np.pi * 6371.0, rel=1e-9)
