import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from spatialkit.service.app import create_app

from conftest import assert_permutation

API = "/api/v1"


@pytest.fixture(scope="module")
def client(demo_fixture_dir):
    app = create_app(demo_fixture_dir)
    with TestClient(app) as c:
        yield c


def new_session(client):
    r = client.post(f"{API}/sessions", json={"dataset": "demo"})
    assert r.status_code == 200, r.text
    return r.json()["session_id"]


def run_chain(client, sid, k=5, background=False):
    """Drive the full loop synchronously; returns the scan payload."""
    assert client.post(
        f"{API}/sessions/{sid}/spec",
        json={"independents": ["x1", "x2", "x3"], "weights": {"kind": "gaussian-knn", "k": 8}},
    ).status_code == 200
    r = client.post(f"{API}/sessions/{sid}/group-scan", json={"attrs": ["race", "edu"], "background": background})
    assert r.status_code == 200
    if background:
        wait_job(client, sid, r.json()["job"]["job_id"])
    scan = client.get(f"{API}/sessions/{sid}/scan").json()
    top = scan["rows"][0]["group"]
    assert client.post(f"{API}/sessions/{sid}/select-group", json={"selectors": top}).status_code == 200
    r = client.post(f"{API}/sessions/{sid}/fit-local", json={"background": background})
    assert r.status_code == 200
    if background:
        wait_job(client, sid, r.json()["job"]["job_id"])
    assert client.post(f"{API}/sessions/{sid}/regionalize", json={"k": k}).status_code == 200
    return scan


def wait_job(client, sid, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        state = client.get(f"{API}/sessions/{sid}/jobs/{job_id}").json()
        if state["status"] != "running":
            assert state["status"] == "done", state
            return
        time.sleep(0.05)
    raise TimeoutError(f"job {job_id} did not finish")


class TestLifecycle:
    def test_unknown_dataset_404(self, client):
        assert client.post(f"{API}/sessions", json={"dataset": "nope"}).status_code == 404

    def test_unknown_session_404(self, client):
        assert client.get(f"{API}/sessions/zzz/variables").status_code == 404

    def test_datasets_listed(self, client):
        assert "demo" in client.get(f"{API}/datasets").json()["datasets"]

    def test_variables_and_correlation(self, client):
        sid = new_session(client)
        payload = client.get(f"{API}/sessions/{sid}/variables").json()
        assert payload["variables"] == ["x1", "x2", "x3"]
        corr = client.get(f"{API}/sessions/{sid}/correlation").json()
        assert len(corr["matrix"]) == 3
        assert corr["matrix"][0][0] == 1.0


class TestStageChain:
    def test_out_of_order_named_prerequisite(self, client):
        sid = new_session(client)
        r = client.post(f"{API}/sessions/{sid}/regionalize", json={"k": 5})
        assert r.status_code == 409
        assert r.json()["error"]["missing"] == "local"

        r = client.get(f"{API}/sessions/{sid}/projection")
        assert r.status_code == 409
        assert r.json()["error"]["missing"] == "region"

        r = client.post(f"{API}/sessions/{sid}/group-scan", json={})
        assert r.status_code == 409
        assert r.json()["error"]["missing"] == "spec"

        r = client.post(f"{API}/sessions/{sid}/select-group", json={"selectors": {"race": "asian"}})
        assert r.status_code == 409
        assert r.json()["error"]["missing"] == "scan"

    def test_default_k_is_five(self, client):
        sid = new_session(client)
        run_chain(client, sid)
        sid2 = new_session(client)
        client.post(f"{API}/sessions/{sid2}/spec", json={"independents": ["x1", "x2"]})
        client.post(f"{API}/sessions/{sid2}/group-scan", json={"background": False})
        scan = client.get(f"{API}/sessions/{sid2}/scan").json()
        client.post(f"{API}/sessions/{sid2}/select-group", json={"selectors": scan["rows"][0]["group"]})
        client.post(f"{API}/sessions/{sid2}/fit-local", json={"background": False})
        r = client.post(f"{API}/sessions/{sid2}/regionalize", json={})
        assert r.json()["k"] == 5

    @pytest.mark.parametrize(
        "setter,body",
        [
            ("dataset", {"dataset": "demo"}),
            ("spec", {"independents": ["x1", "x2"]}),
            ("group-scan", {"background": False}),
            ("select-group", None),  # resolved at call time
            ("fit-local", {"background": False, "bandwidth": 40}),
            ("regionalize", {"k": 4}),
        ],
    )
    def test_invalidation_of_downstream(self, client, setter, body):
        sid = new_session(client)
        run_chain(client, sid)
        assert client.get(f"{API}/sessions/{sid}/projection").status_code == 200

        if setter == "select-group":
            scan = client.get(f"{API}/sessions/{sid}/scan").json()
            body = {"selectors": scan["rows"][1]["group"]}
        r = client.post(f"{API}/sessions/{sid}/{setter}", json=body)
        assert r.status_code == 200, r.text

        downstream_of = {
            "dataset": ["spec", "scan", "group", "local", "region"],
            "spec": ["scan", "group", "local", "region"],
            "group-scan": ["group", "local", "region"],
            "select-group": ["local", "region"],
            "fit-local": ["region"],
            "regionalize": [],
        }[setter]
        stages = client.get(f"{API}/sessions/{sid}").json()["stages"]
        for stage in downstream_of:
            if setter == "group-scan" and stage == "scan":
                continue
            assert stage not in stages, f"{setter} should clear {stage}"
        if downstream_of and "region" in downstream_of:
            assert client.get(f"{API}/sessions/{sid}/projection").status_code == 409
        else:
            assert client.get(f"{API}/sessions/{sid}/projection").status_code == 200


class TestAsyncJobs:
    def test_background_flow_and_busy(self, client):
        sid = new_session(client)
        client.post(f"{API}/sessions/{sid}/spec", json={"independents": ["x1", "x2", "x3"]})
        r = client.post(f"{API}/sessions/{sid}/group-scan", json={"background": True})
        job_id = r.json()["job"]["job_id"]
        # A concurrent mutation while the job runs must 409 (or the job is
        # already done, in which case the second scan simply reruns).
        r2 = client.post(f"{API}/sessions/{sid}/group-scan", json={"background": True})
        if r2.status_code == 409:
            assert r2.json()["error"]["type"] == "busy"
            wait_job(client, sid, job_id)
        else:
            wait_job(client, sid, r2.json()["job"]["job_id"])
        assert client.get(f"{API}/sessions/{sid}/scan").status_code == 200

    def test_failed_job_reports_error(self, client):
        sid = new_session(client)
        client.post(f"{API}/sessions/{sid}/spec", json={"independents": ["x1"]})
        r = client.post(f"{API}/sessions/{sid}/group-scan", json={"attrs": ["bogus"], "background": True})
        job_id = r.json()["job"]["job_id"]
        deadline = time.time() + 10
        while time.time() < deadline:
            state = client.get(f"{API}/sessions/{sid}/jobs/{job_id}").json()
            if state["status"] != "running":
                break
            time.sleep(0.05)
        assert state["status"] == "failed"
        assert "bogus" in state["error"]


@pytest.fixture(scope="module")
def ready(client):
    sid = new_session(client)
    scan = run_chain(client, sid)
    return sid, scan


class TestPayloads:
    def test_scan_sorted_by_sdm_moran(self, ready, client):
        sid, scan = ready
        morans = [r["moran_sdm"]["i"] for r in scan["rows"] if r["error"] is None]
        assert morans == sorted(morans, reverse=True)

    def test_projection_schema(self, ready, client):
        sid, _ = ready
        payload = client.get(f"{API}/sessions/{sid}/projection").json()
        n = payload["n"]
        assert n == 100
        assert_permutation(payload["leaf_order"], n)
        segments = payload["segments"]
        assert segments[0][1] == 0 and segments[-1][2] == n
        for (c1, s1, e1), (c2, s2, e2) in zip(segments, segments[1:]):
            assert e1 == s2
        for name, values in payload["variables"].items():
            assert len(values) == n
            finite = [v for v in values if v is not None]
            assert all(0.0 <= v <= 1.0 for v in finite)
        assert "rate:voted" in payload["variables"]
        assert "beta:x1" in payload["variables"]

    def test_glyphs_schema(self, ready, client):
        sid, _ = ready
        payload = client.get(f"{API}/sessions/{sid}/glyphs").json()
        assert len(payload["clusters"]) == 5
        for entry in payload["clusters"]:
            assert len(entry["spillover"]) == 16
            assert len(entry["radar"]["values"]) == len(entry["radar"]["axes"])
            assert all(0.0 <= v <= 1.0 for v in entry["radar"]["values"])
            lon, lat = entry["representative"]
            assert -180 <= lon <= 180 and -90 <= lat <= 90

    def test_histograms_schema(self, ready, client):
        sid, _ = ready
        payload = client.get(f"{API}/sessions/{sid}/cluster-histograms").json()
        hist = payload["variables"]["x1"]
        assert len(hist["bin_edges"]) == 21
        total = sum(sum(counts) for counts in hist["clusters"].values())
        assert total == 100

    def test_parallel_sets_reproducible(self, ready, client):
        sid, _ = ready
        a = client.get(f"{API}/sessions/{sid}/parallel-sets-sample", params={"cluster": 0, "m": 50, "seed": 9}).json()
        b = client.get(f"{API}/sessions/{sid}/parallel-sets-sample", params={"cluster": 0, "m": 50, "seed": 9}).json()
        assert a == b
        assert len(a["individuals"]) == 50
        assert set(a["attributes"]) == {"race", "edu"}

    def test_parallel_sets_single_subgroup_binomial(self):
        # One subgroup (pop 100, 40 voters) in the cluster: sampled
        # voted-count must be binomially plausible and exactly reproducible
        # under the seed.
        import numpy as np

        from spatialkit.regionalize import MergeTree, Regionalization
        from spatialkit.service.pipeline import parallel_sets_sample
        from spatialkit.synthgen import gen_lattice, gen_subgroups

        md = gen_lattice(2, 2, 500.0)
        sd = gen_subgroups(md, {"g": ["only"]}, {("only",): 0.4}, pops=100, seed=1)
        from conftest import frame_from_census

        class FakeCensus:
            table = __import__("pandas").DataFrame(
                {"x1": np.zeros(4)}, index=__import__("pandas").Index(md.unit_ids, name="unit_id")
            )

        frame = frame_from_census(md, FakeCensus)
        reg = Regionalization(
            k=2,
            labels=np.array([0, 1, 1, 1]),
            leaf_order=np.arange(4),
            feature_names=[],
            feature_matrix=np.zeros((4, 1)),
            tree=MergeTree(n_leaves=4, merges=[]),
            included=np.arange(4),
        )
        draws = [
            parallel_sets_sample(frame, sd, reg, "voted", cluster=0, m=10, seed=1) for _ in range(2)
        ]
        assert draws[0] == draws[1]
        assert len(draws[0]["individuals"]) == 10
        voted = sum(ind["voted"] for ind in draws[0]["individuals"])
        # Binomial(10, 0.4): leaving [0, 9] has probability ~1e-4.
        assert 0 <= voted <= 9

    def test_geometry_and_choropleth(self, ready, client):
        sid, _ = ready
        geo = client.get(f"{API}/sessions/{sid}/geometry").json()
        assert geo["type"] == "FeatureCollection"
        assert len(geo["features"]) == 100
        assert all("cluster" in f["properties"] for f in geo["features"])
        choro = client.get(f"{API}/sessions/{sid}/choropleth", params={"variable": "x1"}).json()
        assert len(choro["values"]) == 100
        finite = [v for v in choro["normalized"] if v is not None]
        assert min(finite) == 0.0 and max(finite) == 1.0

    def test_representative_endpoint(self, ready, client):
        sid, _ = ready
        r = client.get(f"{API}/sessions/{sid}/clusters/0/representative")
        assert r.status_code == 200
        assert len(r.json()["coordinate"]) == 2
        assert client.get(f"{API}/sessions/{sid}/clusters/99/representative").status_code == 400

    def test_snapshot_contains_stages(self, ready, client):
        sid, _ = ready
        snap = client.get(f"{API}/sessions/{sid}/snapshot").json()
        assert {"session", "spec", "scan", "group", "local_fit", "regionalization"} <= set(snap)


class TestSessionIsolation:
    def test_interleaved_sessions_match_serial(self, client):
        # Serial reference
        sid_ref = new_session(client)
        run_chain(client, sid_ref, k=4)
        ref = client.get(f"{API}/sessions/{sid_ref}/projection").json()

        # Two interleaved sessions with different k
        s1 = new_session(client)
        s2 = new_session(client)
        for sid, indep in ((s1, ["x1", "x2", "x3"]), (s2, ["x1", "x2"])):
            client.post(f"{API}/sessions/{sid}/spec", json={"independents": indep})
        for sid in (s1, s2):
            client.post(f"{API}/sessions/{sid}/group-scan", json={"attrs": ["race", "edu"], "background": False})
        for sid in (s1, s2):
            scan = client.get(f"{API}/sessions/{sid}/scan").json()
            client.post(f"{API}/sessions/{sid}/select-group", json={"selectors": scan["rows"][0]["group"]})
        for sid in (s1, s2):
            client.post(f"{API}/sessions/{sid}/fit-local", json={"background": False})
        client.post(f"{API}/sessions/{s1}/regionalize", json={"k": 4})
        client.post(f"{API}/sessions/{s2}/regionalize", json={"k": 3})

        p1 = client.get(f"{API}/sessions/{s1}/projection").json()
        p2 = client.get(f"{API}/sessions/{s2}/projection").json()
        assert p1 == ref  # same inputs, same results, regardless of s2 activity
        assert p2["k"] == 3
        assert p1["k"] == 4
