import json

import numpy as np
import pytest

from spatialkit.geodata import SpatialFrame
from spatialkit.synthgen import gen_lattice, make_demo_fixture


def frame_from_census(md, cd, extra=None) -> SpatialFrame:
    """Assemble a SpatialFrame directly from generator output (bypasses files)."""
    variables = {c: cd.table[c].to_numpy(dtype=float) for c in cd.table.columns}
    if extra:
        variables.update(extra)
    return SpatialFrame(
        unit_ids=md.unit_ids,
        units=list(md.units),
        variables=variables,
        mean_latitude=md.mean_latitude,
    )


@pytest.fixture(scope="session")
def lattice10():
    return gen_lattice(10, 10, 500.0)


@pytest.fixture(scope="session")
def demo_fixture_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixtures")
    make_demo_fixture(root / "demo", rows=10, cols=10, seed=7)
    return root


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def assert_permutation(seq, n):
    assert sorted(seq) == list(range(n))


def pytest_runtest_logreport(report):
    # One visible verdict line per acceptance criterion.
    if report.when == "call" and report.nodeid.split("::")[0].endswith("test_acceptance.py"):
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {name}: {report.outcome.upper()}")


rng_default = np.random.default_rng
