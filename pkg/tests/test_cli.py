import filecmp
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from spatialkit.cli import main

from conftest import load_json

BUNDLE_FILES = [
    "scan.json",
    "global_fit.json",
    "local_fit.json",
    "regionalization.json",
    "spillover.json",
    "projection.json",
]


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


def write_config(path: Path, fixture_dir: Path, **overrides) -> Path:
    config = {
        "dataset": {"dir": str(fixture_dir)},
        "spec": {"independents": ["x1", "x2", "x3"], "include_wy": True},
        "weights": {"kind": "gaussian-knn", "k": 8},
        "scan": {"attrs": ["race", "edu"], "min_pop": 10},
        "group": "top",
        "k": 5,
    }
    config.update(overrides)
    cfg = path / "config.json"
    cfg.write_text(json.dumps(config))
    return cfg


class TestRun:
    def test_bundle_complete(self, runner, demo_fixture_dir, tmp_path):
        cfg = write_config(tmp_path, demo_fixture_dir / "demo")
        result = runner.invoke(main, ["run", str(cfg), "--out", str(tmp_path / "bundle")])
        assert result.exit_code == 0, result.output
        for name in BUNDLE_FILES + ["run_log.json"]:
            assert (tmp_path / "bundle" / name).exists(), name
        log = load_json(tmp_path / "bundle" / "run_log.json")
        assert "failed_stage" not in log

    def test_unknown_variable_exit_2(self, runner, demo_fixture_dir, tmp_path):
        cfg = write_config(tmp_path, demo_fixture_dir / "demo", spec={"independents": ["x1", "nope"]})
        result = runner.invoke(main, ["run", str(cfg), "--out", str(tmp_path / "b2")])
        assert result.exit_code == 2
        assert "nope" in result.output

    def test_byte_identical_bundles(self, runner, demo_fixture_dir, tmp_path):
        cfg = write_config(tmp_path, demo_fixture_dir / "demo")
        assert runner.invoke(main, ["run", str(cfg), "--out", str(tmp_path / "b1")]).exit_code == 0
        assert runner.invoke(main, ["run", str(cfg), "--out", str(tmp_path / "b2")]).exit_code == 0
        for name in BUNDLE_FILES + ["run_log.json"]:
            assert filecmp.cmp(tmp_path / "b1" / name, tmp_path / "b2" / name, shallow=False), name

    def test_partial_bundle_flagged_on_failure(self, runner, demo_fixture_dir, tmp_path):
        # k larger than n fails at the regionalize stage, after scan wrote.
        cfg = write_config(tmp_path, demo_fixture_dir / "demo", k=5000)
        result = runner.invoke(main, ["run", str(cfg), "--out", str(tmp_path / "b3")])
        assert result.exit_code == 1
        log = load_json(tmp_path / "b3" / "run_log.json")
        assert log["failed_stage"] == "regionalize"
        assert (tmp_path / "b3" / "scan.json").exists()


class TestSynth:
    def test_synth_writes_fixture(self, runner, tmp_path):
        result = runner.invoke(main, ["synth", str(tmp_path / "fx"), "--rows", "6", "--cols", "6"])
        assert result.exit_code == 0, result.output
        for name in ("meta.geojson", "census.csv", "subgroups.csv", "manifest.json"):
            assert (tmp_path / "fx" / name).exists()

    def test_projection_payload_schema(self, runner, demo_fixture_dir, tmp_path):
        cfg = write_config(tmp_path, demo_fixture_dir / "demo")
        assert runner.invoke(main, ["run", str(cfg), "--out", str(tmp_path / "b4")]).exit_code == 0
        proj = load_json(tmp_path / "b4" / "projection.json")
        assert sorted(proj["leaf_order"]) == list(range(proj["n"]))
        assert proj["segments"][0][1] == 0
        assert proj["segments"][-1][2] == proj["n"]
