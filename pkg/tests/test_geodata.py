import json
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spatialkit.geodata import (
    EARTH_RADIUS_M,
    CensusDataset,
    GeometryError,
    join_frame,
    load_census,
    load_geometry,
    load_subgroups,
    minmax_normalize,
)
from spatialkit.synthgen import meta_to_geojson


def square(lon0, lat0, size=1.0):
    return {
        "type": "Polygon",
        "coordinates": [[
            [lon0, lat0],
            [lon0 + size, lat0],
            [lon0 + size, lat0 + size],
            [lon0, lat0 + size],
            [lon0, lat0],
        ]],
    }


def feature_collection(entries):
    return {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "properties": {"unit_id": uid}, "geometry": geom} for uid, geom in entries
        ],
    }


def write_geojson(tmp_path, doc, name="meta.geojson"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestLoadGeometry:
    def test_unit_square_grid_centroids(self, tmp_path):
        doc = feature_collection(
            [(f"u{i}{j}", square(i, j)) for i in range(2) for j in range(2)]
        )
        md = load_geometry(write_geojson(tmp_path, doc))
        assert len(md) == 4
        # Mean vertex latitude of the 2x2 degree grid is 1.0.
        mean_lat = math.radians(1.0)
        for unit in md.units:
            lon0, lat0 = int(unit.unit_id[1]), int(unit.unit_id[2])
            expect_x = EARTH_RADIUS_M * math.cos(mean_lat) * math.radians(lon0 + 0.5)
            expect_y = EARTH_RADIUS_M * math.radians(lat0 + 0.5)
            assert unit.centroid_xy == pytest.approx((expect_x, expect_y), rel=1e-12)

    def test_duplicate_ids_rejected_by_name(self, tmp_path):
        doc = feature_collection([("A", square(0, 0)), ("A", square(1, 0)), ("B", square(2, 0))])
        with pytest.raises(GeometryError, match="duplicate unit ids: A"):
            load_geometry(write_geojson(tmp_path, doc))

    def test_lattice_roundtrip_all_valid(self, tmp_path, lattice10):
        path = write_geojson(tmp_path, meta_to_geojson(lattice10))
        md = load_geometry(path)
        assert len(md) == 100
        assert md.unit_ids == lattice10.unit_ids
        np.testing.assert_allclose(md.centroids, lattice10.centroids, atol=1e-6)

    def test_self_intersecting_ring_reported(self, tmp_path):
        bowtie = {
            "type": "Polygon",
            "coordinates": [[[0, 0], [1, 1], [1, 0], [0, 1], [0, 0]]],
        }
        doc = feature_collection([("ok", square(5, 5)), ("bad", bowtie)])
        with pytest.raises(GeometryError) as err:
            load_geometry(write_geojson(tmp_path, doc))
        assert any("bad" in e and "self-intersection" in e for e in err.value.errors)

    def test_unclosed_and_degenerate_rings(self, tmp_path):
        unclosed = {"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1], [0, 1]]]}
        doc = feature_collection([("u", unclosed)])
        with pytest.raises(GeometryError, match="invalid feature"):
            load_geometry(write_geojson(tmp_path, doc))
        sliver = {"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [0, 0], [1, 0], [0, 0]]]}
        with pytest.raises(GeometryError):
            load_geometry(write_geojson(tmp_path, feature_collection([("s", sliver)])))

    def test_missing_id_property(self, tmp_path):
        doc = {
            "type": "FeatureCollection",
            "features": [{"type": "Feature", "properties": {}, "geometry": square(0, 0)}],
        }
        with pytest.raises(GeometryError):
            load_geometry(write_geojson(tmp_path, doc))

    def test_centroid_deterministic(self, tmp_path, lattice10):
        path = write_geojson(tmp_path, meta_to_geojson(lattice10))
        md1 = load_geometry(path)
        md2 = load_geometry(path)
        assert np.array_equal(md1.centroids, md2.centroids)


class TestTabular:
    def test_census_roundtrip(self, tmp_path):
        path = tmp_path / "census.csv"
        path.write_text("unit_id,a,b\nu1,1.5,2\nu2,2.5,3\n")
        cd = load_census(path)
        assert cd.variables == ["a", "b"]
        assert cd.table.loc["u1", "a"] == 1.5

    def test_census_duplicate_ids(self, tmp_path):
        path = tmp_path / "census.csv"
        path.write_text("unit_id,a\nu1,1\nu1,2\n")
        with pytest.raises(ValueError, match="duplicate"):
            load_census(path)

    def test_subgroups_behavior_bounded(self, tmp_path):
        path = tmp_path / "sub.csv"
        path.write_text("unit_id,race,population,voted\nu1,a,10,11\n")
        with pytest.raises(ValueError, match="exceeds population"):
            load_subgroups(path, behaviors=["voted"])

    def test_subgroups_duplicate_profile_rejected(self, tmp_path):
        path = tmp_path / "sub.csv"
        path.write_text("unit_id,race,population,voted\nu1,a,10,5\nu1,a,20,8\n")
        with pytest.raises(ValueError, match="duplicate"):
            load_subgroups(path, behaviors=["voted"])


class TestJoin:
    def make_md(self, ids):
        doc = feature_collection([(uid, square(i, 0)) for i, uid in enumerate(ids)])
        import tempfile, os

        fd, path = tempfile.mkstemp(suffix=".geojson")
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh)
        return load_geometry(path)

    def census(self, mapping):
        df = pd.DataFrame(
            [{"unit_id": uid, **vals} for uid, vals in mapping.items()]
        ).set_index("unit_id")
        return CensusDataset(table=df)

    def test_inner_join_reports_drops(self):
        md = self.make_md(["A", "B"])
        cd = self.census({"A": {"x": 1.0}, "B": {"x": 2.0}, "C": {"x": 3.0}})
        frame, report = join_frame(md, cd)
        assert frame.unit_ids == ["A", "B"]
        assert report.dropped_from_census == ["C"]
        assert report.dropped_from_geometry == []

    def test_empty_intersection_fatal(self):
        md = self.make_md(["A", "B"])
        cd = self.census({"C": {"x": 1.0}})
        with pytest.raises(ValueError, match="no unit ids are shared"):
            join_frame(md, cd)

    def test_missing_values_dropped_with_report(self):
        md = self.make_md(["A", "B", "C"])
        cd = self.census({"A": {"x": 1.0}, "B": {"x": np.nan}, "C": {"x": 3.0}})
        frame, report = join_frame(md, cd)
        assert frame.unit_ids == ["A", "C"]
        assert report.dropped_missing_values == ["B"]

    def test_join_order_insensitive(self):
        md = self.make_md(["A", "B", "C"])
        cd1 = self.census({"A": {"x": 1.0}, "B": {"x": 2.0}, "C": {"x": 3.0}})
        cd2 = CensusDataset(table=cd1.table.iloc[[2, 0, 1]])
        f1, _ = join_frame(md, cd1)
        f2, _ = join_frame(md, cd2)
        assert f1.unit_ids == f2.unit_ids
        np.testing.assert_array_equal(f1.variables["x"], f2.variables["x"])

    def test_synthgen_triple_zero_drops(self, lattice10):
        from spatialkit.synthgen import gen_sdm, gen_subgroups
        from spatialkit.weights import build_gaussian, row_standardize

        w = row_standardize(build_gaussian(lattice10, 8))
        cd, _ = gen_sdm(lattice10, w, [1.0], 0.0, [0.0], 0.0, seed=1)
        sd = gen_subgroups(lattice10, {"g": ["a"]}, {("a",): 0.5}, pops=50, seed=1)
        frame, report = join_frame(lattice10, cd, sd)
        assert frame.n == 100
        assert not report.dropped_from_geometry
        assert not report.dropped_from_census
        assert not report.dropped_from_subgroups


class TestMinMax:
    def test_examples(self):
        np.testing.assert_allclose(minmax_normalize([0, 5, 10]), [0, 0.5, 1])
        np.testing.assert_allclose(minmax_normalize([7, 7, 7]), [0.5, 0.5, 0.5])
        np.testing.assert_allclose(minmax_normalize([-2, 0, 2]), [0, 0.5, 1])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            minmax_normalize([])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    def test_range_and_extrema_preserved(self, values):
        arr = np.asarray(values)
        out = minmax_normalize(arr)
        assert np.all(out >= 0) and np.all(out <= 1)
        if arr.max() > arr.min():
            assert out[np.argmax(arr)] == 1.0
            assert out[np.argmin(arr)] == 0.0
