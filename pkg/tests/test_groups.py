import numpy as np
import pandas as pd
import pytest

from spatialkit.geodata import SubgroupDataset
from spatialkit.groups import GroupKey, aggregate_rate, enumerate_groups
from spatialkit.synthgen import gen_lattice, gen_subgroups


def make_sd(rows):
    return SubgroupDataset(table=pd.DataFrame(rows), demographic=["race", "edu"], behavioral=["voted"])


@pytest.fixture
def sd_two_attrs():
    rows = []
    for uid in ("u1", "u2"):
        for race in ("asian", "black", "hispanic", "white"):
            for edu in ("college", "no_college"):
                rows.append(
                    {"unit_id": uid, "race": race, "edu": edu, "population": 20, "voted": 10}
                )
    return make_sd(rows)


class TestEnumerate:
    def test_cartesian_product_count(self, sd_two_attrs):
        keys = enumerate_groups(["edu", "race"], sd_two_attrs)
        assert len(keys) == 8

    def test_lexicographic_order(self, sd_two_attrs):
        keys = enumerate_groups(["edu"], sd_two_attrs)
        assert [k.selectors for k in keys] == [
            (("edu", "college"),),
            (("edu", "no_college"),),
        ]

    def test_unknown_attribute_named(self, sd_two_attrs):
        with pytest.raises(KeyError, match="income"):
            enumerate_groups(["income"], sd_two_attrs)

    def test_matches_generator_schema(self):
        md = gen_lattice(3, 3, 500.0)
        schema = {"a": ["x", "y"], "b": ["p", "q", "r"]}
        rates = {(la, lb): 0.5 for la in schema["a"] for lb in schema["b"]}
        sd = gen_subgroups(md, schema, rates, pops=30, seed=0)
        keys = enumerate_groups(["a", "b"], sd)
        assert len(keys) == 6
        assert keys[0].selectors == (("a", "x"), ("b", "p"))


class TestAggregate:
    def test_single_row_rate(self):
        sd = make_sd([{"unit_id": "u1", "race": "asian", "edu": "college", "population": 60, "voted": 30}])
        series = aggregate_rate(sd, GroupKey.from_mapping({"race": "asian"}), "voted", min_pop=1)
        assert series.rate[0] == pytest.approx(0.5)

    def test_pooled_counts_not_mean_of_rates(self):
        sd = make_sd(
            [
                {"unit_id": "u1", "race": "asian", "edu": "college", "population": 20, "voted": 10},
                {"unit_id": "u1", "race": "asian", "edu": "no_college", "population": 40, "voted": 30},
            ]
        )
        series = aggregate_rate(sd, GroupKey.from_mapping({"race": "asian"}), "voted", min_pop=1)
        assert series.rate[0] == pytest.approx(40.0 / 60.0)

    def test_planted_rates_recovered_exactly(self):
        md = gen_lattice(4, 4, 500.0)
        rng = np.random.default_rng(2)
        planted = rng.integers(1, 20, size=16) / 20.0  # multiples of 0.05 on pop 60
        sd = gen_subgroups(md, {"g": ["only"]}, {("only",): planted}, pops=60, seed=2)
        series = aggregate_rate(sd, GroupKey.from_mapping({"g": "only"}), "voted", min_pop=1, unit_ids=md.unit_ids)
        np.testing.assert_allclose(series.rate, planted, atol=1e-12)

    def test_zero_match_error(self, sd_two_attrs):
        with pytest.raises(ValueError, match="matches no subgroup rows"):
            aggregate_rate(sd_two_attrs, GroupKey.from_mapping({"race": "martian"}), "voted")

    def test_min_pop_flags_missing(self):
        sd = make_sd(
            [
                {"unit_id": "u1", "race": "asian", "edu": "college", "population": 5, "voted": 2},
                {"unit_id": "u2", "race": "asian", "edu": "college", "population": 50, "voted": 20},
            ]
        )
        series = aggregate_rate(sd, GroupKey.from_mapping({"race": "asian"}), "voted", min_pop=10)
        assert np.isnan(series.rate[0])
        assert series.rate[1] == pytest.approx(0.4)
        assert series.coverage == pytest.approx(0.5)

    def test_rate_bounds(self, sd_two_attrs):
        series = aggregate_rate(sd_two_attrs, GroupKey.from_mapping({"race": "white"}), "voted", min_pop=1)
        defined = series.rate[np.isfinite(series.rate)]
        assert np.all((defined >= 0) & (defined <= 1))

    def test_empty_selector_equals_all_rows(self, sd_two_attrs):
        all_rows = aggregate_rate(sd_two_attrs, GroupKey(selectors=()), "voted", min_pop=1)
        table = sd_two_attrs.table
        for idx, uid in enumerate(all_rows.unit_ids):
            sub = table[table["unit_id"] == uid]
            assert all_rows.rate[idx] == pytest.approx(sub["voted"].sum() / sub["population"].sum())

    def test_partition_sums_to_total_population(self, sd_two_attrs):
        keys = enumerate_groups(["race", "edu"], sd_two_attrs)
        total = np.zeros(2)
        for key in keys:
            total += aggregate_rate(sd_two_attrs, key, "voted", min_pop=1).population
        per_unit = sd_two_attrs.table.groupby("unit_id")["population"].sum()
        np.testing.assert_array_equal(total, per_unit.loc[["u1", "u2"]].to_numpy())

    def test_unknown_behavior(self, sd_two_attrs):
        with pytest.raises(KeyError, match="donated"):
            aggregate_rate(sd_two_attrs, GroupKey.from_mapping({"race": "white"}), "donated")
