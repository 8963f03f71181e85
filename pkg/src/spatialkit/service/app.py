"""HTTP API for interactive sessions (mounted under /api/v1).

The frontend drives the four-step loop against these endpoints: pick
variables and a model spec, scan and pick a social group, fit the local
model, regionalize, then read the view payloads. Out-of-order requests get
a 409 naming the missing prerequisite stage. Scan and local-fit are the two
slow calls; they run as background jobs with a polling endpoint unless the
request opts into synchronous execution.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse

from ..diagnostics import morans_i, scan_groups
from ..groups import DEFAULT_MIN_POP, GroupKey, aggregate_rate
from ..models import ModelSpec, fit_gwr_sdm, fit_ols, fit_sdm, select_bandwidth
from ..regionalize import DEFAULT_K, build_features, constrained_cluster
from ..spillover import aggregate_clusters, bin_directions, pairwise_spillover
from ..weights import build_contiguity
from . import pipeline
from .sessions import BusyError, SessionStore, StageError

API_PREFIX = "/api/v1"

__all__ = ["create_app"]


def create_app(data_root) -> FastAPI:
    app = FastAPI(title="spatialkit session API", version="1")
    store = SessionStore(Path(data_root))
    app.state.store = store

    @app.exception_handler(StageError)
    async def stage_error(_req: Request, exc: StageError):
        return JSONResponse(
            status_code=409,
            content={"error": {"type": "stage", "missing": exc.missing, "message": str(exc)}},
        )

    @app.exception_handler(BusyError)
    async def busy_error(_req: Request, exc: BusyError):
        return JSONResponse(
            status_code=409,
            content={"error": {"type": "busy", "job_id": exc.job_id, "message": str(exc)}},
        )

    @app.exception_handler(KeyError)
    async def missing_error(_req: Request, exc: KeyError):
        return JSONResponse(status_code=404, content={"error": {"type": "not_found", "message": str(exc)}})

    @app.exception_handler(ValueError)
    async def value_error(_req: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": {"type": "invalid", "message": str(exc)}})

    def _load_dataset(session, name: str):
        dataset_dir = store.data_root / name
        if not dataset_dir.is_dir():
            raise KeyError(f"dataset {name!r} not found under {store.data_root}")
        bundle = pipeline.load_dataset_dir(dataset_dir)
        session.dataset_name = name
        session.frame = bundle.frame
        session.sd = bundle.sd
        session.behavior = bundle.behavior
        session.clear_downstream("dataset")

    # -- session lifecycle ---------------------------------------------------

    @app.get(f"{API_PREFIX}/datasets")
    def list_datasets():
        names = sorted(p.name for p in store.data_root.iterdir() if (p / "meta.geojson").exists())
        return {"datasets": names}

    @app.post(f"{API_PREFIX}/sessions")
    def create_session(payload: dict = Body(...)):
        session = store.create()
        _load_dataset(session, payload["dataset"])
        return {"session_id": session.session_id, "n_units": session.frame.n}

    @app.get(f"{API_PREFIX}/sessions/{{sid}}")
    def session_status(sid: str):
        return store.get(sid).status_json()

    @app.post(f"{API_PREFIX}/sessions/{{sid}}/dataset")
    def reload_dataset(sid: str, payload: dict = Body(...)):
        session = store.get(sid)
        if session.active_job is not None:
            raise BusyError(session.active_job)
        _load_dataset(session, payload["dataset"])
        return session.status_json()

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/jobs/{{job_id}}")
    def job_status(sid: str, job_id: str):
        session = store.get(sid)
        if job_id not in session.jobs:
            raise KeyError(f"unknown job {job_id!r}")
        return session.jobs[job_id].to_json()

    # -- stage 1: variables -------------------------------------------------

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/variables")
    def variables(sid: str):
        session = store.get(sid)
        session.require("dataset")
        return {
            "variables": sorted(session.frame.variables),
            "demographic": session.sd.demographic,
            "behavior": session.behavior,
            "n_units": session.frame.n,
        }

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/correlation")
    def correlation(sid: str, vars: str | None = None):
        session = store.get(sid)
        session.require("dataset")
        names = vars.split(",") if vars else sorted(session.frame.variables)
        return pipeline.correlation_payload(session.frame, names)

    @app.post(f"{API_PREFIX}/sessions/{{sid}}/spec")
    def set_spec(sid: str, payload: dict = Body(...)):
        session = store.get(sid)
        session.require("dataset")
        if session.active_job is not None:
            raise BusyError(session.active_job)
        spec = ModelSpec(
            dependent=payload.get("dependent", session.behavior),
            independents=tuple(payload.get("independents", ())),
            include_wy=bool(payload.get("include_wy", True)),
            include_wx=bool(payload.get("include_wx", True)),
            wx_exclude=tuple(payload.get("wx_exclude", ())),
        )
        unknown = [v for v in spec.independents if v not in session.frame.variables]
        if unknown:
            raise ValueError(f"unknown variable(s): {', '.join(unknown)}")
        session.spec = spec
        session.weights_config = dict(payload.get("weights", {}))
        session.w = pipeline.build_weights(session.frame, session.weights_config)
        session.clear_downstream("spec")
        return {"spec": spec.to_json(), "weights": session.w.to_json() | {"triplets": "omitted"}}

    # -- stage 2: group scan and selection ------------------------------------

    @app.post(f"{API_PREFIX}/sessions/{{sid}}/group-scan")
    def group_scan(sid: str, payload: dict = Body(default={})):
        session = store.get(sid)
        session.require("spec")
        if session.active_job is not None:
            raise BusyError(session.active_job)
        attrs = payload.get("attrs") or session.sd.demographic
        min_pop = int(payload.get("min_pop", DEFAULT_MIN_POP))
        background = bool(payload.get("background", True))
        session.clear_downstream("spec")

        def work():
            scan = scan_groups(session.spec, session.frame, session.sd, attrs, session.w, min_pop=min_pop)
            session.scan = scan
            session.scan_params = {"attrs": list(attrs), "min_pop": min_pop}

        job = store.submit_job(session, "scan", work, background=background)
        return {"job": job.to_json()}

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/scan")
    def scan_results(sid: str):
        session = store.get(sid)
        session.require("scan")
        return session.scan.to_json()

    @app.post(f"{API_PREFIX}/sessions/{{sid}}/select-group")
    def select_group(sid: str, payload: dict = Body(...)):
        session = store.get(sid)
        session.require("scan")
        if session.active_job is not None:
            raise BusyError(session.active_job)
        key = GroupKey.from_mapping(payload["selectors"])
        scanned = {row.group for row in session.scan.rows}
        if key not in scanned:
            raise ValueError(f"group {key.label()} is not among the scanned groups")
        series = aggregate_rate(
            session.sd,
            key,
            session.behavior,
            min_pop=session.scan_params.get("min_pop", DEFAULT_MIN_POP),
            unit_ids=session.frame.unit_ids,
        )
        session.group = key
        session.series = series
        session.frame_aug = pipeline.augment_frame(session.frame, series, session.behavior)
        session.clear_downstream("group")
        return {"group": key.to_json(), "coverage": series.coverage}

    # -- stage 3: local fit ---------------------------------------------------

    @app.post(f"{API_PREFIX}/sessions/{{sid}}/fit-local")
    def fit_local(sid: str, payload: dict = Body(default={})):
        session = store.get(sid)
        session.require("group")
        if session.active_job is not None:
            raise BusyError(session.active_job)
        bandwidth = payload.get("bandwidth")
        background = bool(payload.get("background", True))
        session.clear_downstream("group")

        def work():
            bw = bandwidth
            if bw is None:
                bw = select_bandwidth(session.spec, session.frame, session.series, session.w)
            local = fit_gwr_sdm(session.spec, session.frame, session.series, session.w, int(bw))
            pairs = pairwise_spillover(local, session.w)
            session.spill_field = bin_directions(pairs, session.frame.meta())
            session.local = local
            session.bandwidth = int(bw)

        job = store.submit_job(session, "local", work, background=background)
        return {"job": job.to_json()}

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/local-fit")
    def local_fit(sid: str):
        session = store.get(sid)
        session.require("local")
        return session.local.to_json()

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/global-fit")
    def global_fit(sid: str):
        session = store.get(sid)
        session.require("group")
        ols = fit_ols(session.spec, session.frame, session.series)
        sdm = fit_sdm(session.spec, session.frame, session.series, session.w)
        return {
            "group": session.group.to_json(),
            "ols": ols.to_json(),
            "sdm": sdm.to_json(),
            "moran_ols": morans_i(ols.residuals, session.w).to_json(),
            "moran_sdm": morans_i(sdm.residuals, session.w).to_json(),
        }

    # -- stage 4: regionalization + payloads ----------------------------------

    @app.post(f"{API_PREFIX}/sessions/{{sid}}/regionalize")
    def regionalize(sid: str, payload: dict = Body(default={})):
        session = store.get(sid)
        session.require("local")
        if session.active_job is not None:
            raise BusyError(session.active_job)
        k = int(payload.get("k", DEFAULT_K))
        features, feat_names, included = build_features(session.local, session.frame, session.spec.independents)
        contig = build_contiguity(session.frame.meta(), rule=payload.get("contiguity", "queen"))
        if len(included) < session.frame.n:
            contig = contig.subset(included)
        _tree, reg = constrained_cluster(features, contig, k=k)
        reg.feature_names = feat_names
        reg.included = included
        session.region = reg
        session.cluster_spill = aggregate_clusters(session.spill_field, reg)
        return {"k": reg.k, "sizes": [int((reg.labels == c).sum()) for c in range(reg.k)]}

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/regionalization")
    def regionalization(sid: str):
        session = store.get(sid)
        session.require("region")
        return session.region.to_json()

    def _payload_variables(session) -> list[str]:
        return list(session.spec.independents) + [pipeline.rate_variable(session.behavior)]

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/projection")
    def projection(sid: str):
        session = store.get(sid)
        session.require("region")
        return pipeline.projection_payload(
            session.frame_aug, session.local, session.region, _payload_variables(session)
        )

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/glyphs")
    def glyphs(sid: str):
        session = store.get(sid)
        session.require("region")
        return pipeline.glyph_payload(
            session.frame_aug, session.region, session.cluster_spill, _payload_variables(session)
        )

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/cluster-histograms")
    def cluster_histograms(sid: str):
        session = store.get(sid)
        session.require("region")
        return pipeline.histogram_payload(session.frame_aug, session.region, _payload_variables(session))

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/parallel-sets-sample")
    def parallel_sets(sid: str, cluster: int, m: int = 200, seed: int = 1):
        session = store.get(sid)
        session.require("region")
        return pipeline.parallel_sets_sample(
            session.frame_aug, session.sd, session.region, session.behavior, cluster, m, seed
        )

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/clusters/{{cluster}}/representative")
    def representative(sid: str, cluster: int):
        session = store.get(sid)
        session.require("region")
        payload = pipeline.glyph_payload(
            session.frame_aug, session.region, session.cluster_spill, _payload_variables(session)
        )
        for entry in payload["clusters"]:
            if entry["cluster"] == cluster:
                return {"cluster": cluster, "coordinate": entry["representative"]}
        raise ValueError(f"cluster {cluster} out of range [0, {session.region.k})")

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/geometry")
    def geometry(sid: str):
        session = store.get(sid)
        session.require("dataset")
        labels = None
        if session.region is not None:
            labels = np.full(session.frame.n, -1, dtype=int)
            labels[session.region.included] = session.region.labels
        features = []
        for idx, unit in enumerate(session.frame.units):
            props = {"unit_id": unit.unit_id}
            if labels is not None:
                props["cluster"] = int(labels[idx])
            features.append({"type": "Feature", "properties": props, "geometry": unit.geometry})
        return {"type": "FeatureCollection", "features": features}

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/choropleth")
    def choropleth(sid: str, variable: str):
        session = store.get(sid)
        session.require("dataset")
        frame = session.frame_aug if session.frame_aug is not None else session.frame
        values = np.asarray(frame.variable(variable), dtype=float)
        from ..geodata import minmax_normalize

        return {
            "variable": variable,
            "unit_ids": frame.unit_ids,
            "values": pipeline._clean(values),
            "normalized": pipeline._clean(minmax_normalize(values)),
        }

    @app.get(f"{API_PREFIX}/sessions/{{sid}}/snapshot")
    def snapshot(sid: str):
        session = store.get(sid)
        out = {"session": session.status_json()}
        if session.spec is not None:
            out["spec"] = session.spec.to_json()
        if session.scan is not None:
            out["scan"] = session.scan.to_json()
        if session.group is not None:
            out["group"] = session.group.to_json()
        if session.local is not None:
            out["local_fit"] = session.local.to_json()
        if session.region is not None:
            out["regionalization"] = session.region.to_json()
            out["cluster_spillover"] = session.cluster_spill.to_json()
        return out

    return app
