"""Pipeline steps and JSON payload builders shared by the API and the CLI.

Everything here is a pure function of its inputs plus explicit seeds, so a
rerun of the same configuration produces byte-identical payloads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..diagnostics import correlation_matrix, morans_i, scan_groups
from ..geodata import (
    SpatialFrame,
    SubgroupDataset,
    join_frame,
    load_census,
    load_geometry,
    load_subgroups,
    minmax_normalize,
)
from ..groups import DEFAULT_MIN_POP, GroupKey, GroupSeries, aggregate_rate
from ..models import LocalFit, ModelSpec, fit_gwr_sdm, fit_ols, fit_sdm, select_bandwidth
from ..regionalize import DEFAULT_K, Regionalization, build_features, cluster_stats, constrained_cluster
from ..spillover import ClusterSpillover, aggregate_clusters, bin_directions, pairwise_spillover
from ..weights import WeightsMatrix, build_contiguity, build_gaussian, build_knn, row_standardize

__all__ = [
    "DatasetBundle",
    "load_dataset_dir",
    "build_weights",
    "rate_variable",
    "augment_frame",
    "projection_payload",
    "glyph_payload",
    "histogram_payload",
    "parallel_sets_sample",
    "run_pipeline",
]


@dataclass
class DatasetBundle:
    frame: SpatialFrame
    sd: SubgroupDataset
    behavior: str
    manifest: dict


def load_dataset_dir(path, id_col: str = "unit_id") -> DatasetBundle:
    """Load a fixture directory (meta.geojson + census.csv + subgroups.csv)."""
    root = Path(path)
    manifest = {}
    manifest_path = root / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
    behavior = manifest.get("behavior", "voted")
    md = load_geometry(root / "meta.geojson", id_property=id_col)
    cd = load_census(root / "census.csv", id_col=id_col)
    sd = load_subgroups(root / "subgroups.csv", behaviors=[behavior], id_col=id_col)
    frame, _report = join_frame(md, cd, sd)
    return DatasetBundle(frame=frame, sd=sd, behavior=behavior, manifest=manifest)


def build_weights(frame: SpatialFrame, config: dict | None) -> WeightsMatrix:
    """Weights from a config mapping {kind, k}; default adaptive Gaussian k=8."""
    config = dict(config or {})
    kind = config.get("kind", "gaussian-knn")
    md = frame.meta()
    if kind == "gaussian-knn":
        w = build_gaussian(md, k=int(config.get("k", 8)))
    elif kind == "knn-binary":
        w = build_knn(md, k=int(config.get("k", 8)))
    elif kind in ("queen", "rook"):
        w = build_contiguity(md, rule=kind)
    else:
        raise ValueError(f"unknown weights kind: {kind!r}")
    return row_standardize(w)


def rate_variable(behavior: str) -> str:
    return f"rate:{behavior}"


def augment_frame(frame: SpatialFrame, series: GroupSeries, behavior: str) -> SpatialFrame:
    """Frame copy with the selected group's rate attached as a variable."""
    variables = dict(frame.variables)
    variables[rate_variable(behavior)] = series.rate
    return replace(frame, variables=variables)


# ---------------------------------------------------------------------------
# payloads


def _clean(values) -> list:
    return [None if not np.isfinite(v) else float(v) for v in np.asarray(values, dtype=float)]


def projection_payload(
    frame: SpatialFrame,
    local: LocalFit,
    reg: Regionalization,
    variables: list[str],
) -> dict:
    """Per-variable min-max normalized values in dendrogram leaf order.

    ``leaf_order`` lists frame indices; the cluster segments partition
    [0, n) so the bar can be painted left to right.
    """
    frame_idx = reg.included if reg.included is not None else np.arange(reg.n)
    frame_order = frame_idx[reg.leaf_order]
    payload_vars = {}
    for v in variables:
        vec = np.asarray(frame.variable(v), dtype=float)[frame_idx]
        payload_vars[v] = _clean(minmax_normalize(vec)[reg.leaf_order])
    for name, surface in local.surfaces().items():
        vec = np.asarray(surface, dtype=float)[frame_idx]
        payload_vars[name] = _clean(minmax_normalize(vec)[reg.leaf_order])
    return {
        "n": int(reg.n),
        "k": int(reg.k),
        "leaf_order": [int(i) for i in frame_order],
        "unit_ids": [frame.unit_ids[i] for i in frame_order],
        "labels_in_order": [int(reg.labels[i]) for i in reg.leaf_order],
        "segments": [[int(c), int(s), int(e)] for c, s, e in reg.segments()],
        "variables": payload_vars,
    }


def glyph_payload(
    frame: SpatialFrame,
    reg: Regionalization,
    cluster_spill: ClusterSpillover,
    radar_variables: list[str],
) -> dict:
    """Per-cluster glyph data: radar axes, cardinal curve, anchor coordinates."""
    stats = cluster_stats(reg, frame, radar_variables)
    frame_idx = reg.included if reg.included is not None else np.arange(reg.n)
    centroids = frame.centroids
    clusters = []
    for c in range(reg.k):
        members = frame_idx[reg.labels == c]
        center = centroids[members].mean(axis=0)
        nearest = members[int(np.argmin(((centroids[members] - center) ** 2).sum(axis=1)))]
        lon, lat = frame.units[nearest].centroid_lonlat
        clusters.append(
            {
                "cluster": c,
                "size": int(len(members)),
                "radar": {"axes": radar_variables, "values": [float(stats[v][c]) for v in radar_variables]},
                "spillover": [float(x) for x in cluster_spill.vectors[c]],
                "representative": [float(lon), float(lat)],
            }
        )
    return {"clusters": clusters, "directions": list(_sector_names())}


def _sector_names():
    from ..spillover import SECTOR_NAMES

    return SECTOR_NAMES


def histogram_payload(frame: SpatialFrame, reg: Regionalization, variables: list[str], bins: int = 20) -> dict:
    frame_idx = reg.included if reg.included is not None else np.arange(reg.n)
    out = {}
    for v in variables:
        vec = np.asarray(frame.variable(v), dtype=float)[frame_idx]
        finite = vec[np.isfinite(vec)]
        lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        if lo == hi:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, bins + 1)
        per_cluster = {}
        for c in range(reg.k):
            members = vec[reg.labels == c]
            members = members[np.isfinite(members)]
            counts, _ = np.histogram(members, bins=edges)
            per_cluster[str(c)] = [int(x) for x in counts]
        out[v] = {"bin_edges": [float(e) for e in edges], "clusters": per_cluster}
    return {"variables": out, "bins": bins}


def parallel_sets_sample(
    frame: SpatialFrame,
    sd: SubgroupDataset,
    reg: Regionalization,
    behavior: str,
    cluster: int,
    m: int,
    seed: int,
) -> dict:
    """Expand subgroup counts into m pseudo-individuals by seeded sampling.

    Categories are (demographic profile) x (behavior yes/no) weighted by
    their counts within the cluster; sampling is proportional with
    replacement, so repeated calls with one seed are identical.
    """
    if not (0 <= cluster < reg.k):
        raise ValueError(f"cluster {cluster} out of range [0, {reg.k})")
    frame_idx = reg.included if reg.included is not None else np.arange(reg.n)
    members = frame_idx[reg.labels == cluster]
    unit_ids = {frame.unit_ids[i] for i in members}
    table = sd.table[sd.table["unit_id"].isin(unit_ids)]
    attrs = sd.demographic

    categories = []
    weights = []
    grouped = table.groupby(attrs, sort=True)[["population", behavior]].sum()
    for combo, row in grouped.iterrows():
        combo = combo if isinstance(combo, tuple) else (combo,)
        yes = int(row[behavior])
        no = int(row["population"]) - yes
        if yes > 0:
            categories.append((combo, True))
            weights.append(yes)
        if no > 0:
            categories.append((combo, False))
            weights.append(no)
    if not categories:
        raise ValueError(f"cluster {cluster} has no subgroup population")

    probs = np.asarray(weights, dtype=float)
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(categories), size=m, p=probs)
    individuals = []
    for d in draws:
        combo, voted = categories[int(d)]
        rec = dict(zip(attrs, [str(v) for v in combo]))
        rec[behavior] = bool(voted)
        individuals.append(rec)
    return {
        "cluster": int(cluster),
        "m": int(m),
        "seed": int(seed),
        "attributes": list(attrs),
        "behavior": behavior,
        "individuals": individuals,
    }


# ---------------------------------------------------------------------------
# headless runner


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str, exit_code: int = 1):
        super().__init__(message)
        self.stage = stage
        self.exit_code = exit_code


def run_pipeline(config: dict, outdir) -> Path:
    """Execute the full analysis chain headlessly and write the JSON bundle.

    Bundle layout (stable names, sorted keys, no timestamps):
    scan.json, global_fit.json, local_fit.json, regionalization.json,
    spillover.json, projection.json, plus run_log.json.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    log: dict = {"stages": [], "config": config}

    def fail(stage: str, message: str, exit_code: int = 1):
        log["failed_stage"] = stage
        log["error"] = message
        _dump(out / "run_log.json", log)
        raise PipelineError(stage, message, exit_code)

    ds_cfg = config.get("dataset")
    if not ds_cfg:
        fail("config", "config lacks a 'dataset' entry", 2)
    try:
        bundle = load_dataset_dir(ds_cfg["dir"], id_col=ds_cfg.get("id_col", "unit_id"))
    except (OSError, ValueError, KeyError) as exc:
        fail("dataset", str(exc), 2)
    frame, sd, behavior = bundle.frame, bundle.sd, bundle.behavior
    log["stages"].append({"stage": "dataset", "units": frame.n})

    spec_cfg = config.get("spec", {})
    unknown = [v for v in spec_cfg.get("independents", []) if v not in frame.variables]
    if unknown:
        fail("spec", f"unknown variable(s): {', '.join(unknown)}", 2)
    try:
        spec = ModelSpec(
            dependent=spec_cfg.get("dependent", behavior),
            independents=tuple(spec_cfg.get("independents", ())),
            include_wy=bool(spec_cfg.get("include_wy", True)),
            include_wx=bool(spec_cfg.get("include_wx", True)),
            wx_exclude=tuple(spec_cfg.get("wx_exclude", ())),
        )
        w = build_weights(frame, config.get("weights"))
    except ValueError as exc:
        fail("spec", str(exc), 2)
    log["stages"].append({"stage": "spec", "spec": spec.to_json(), "weights": config.get("weights", {})})

    scan_cfg = config.get("scan", {})
    attrs = scan_cfg.get("attrs") or sd.demographic
    min_pop = int(scan_cfg.get("min_pop", DEFAULT_MIN_POP))
    try:
        scan = scan_groups(spec, frame, sd, attrs, w, min_pop=min_pop)
    except (ValueError, KeyError) as exc:
        fail("scan", str(exc), 2)
    _dump(out / "scan.json", scan.to_json())
    log["stages"].append({"stage": "scan", "groups": len(scan.rows), "excluded": len(scan.excluded)})

    group_cfg = config.get("group", "top")
    if group_cfg == "top":
        ranked = [r for r in scan.rows if r.error is None]
        if not ranked:
            fail("group", "no group produced a successful fit")
        key = ranked[0].group
    else:
        key = GroupKey.from_mapping(group_cfg)
    series = aggregate_rate(sd, key, behavior, min_pop=min_pop, unit_ids=frame.unit_ids)
    aug = augment_frame(frame, series, behavior)
    log["stages"].append({"stage": "group", "group": key.to_json(), "coverage": series.coverage})

    try:
        ols = fit_ols(spec, frame, series)
        sdm = fit_sdm(spec, frame, series, w)
        global_payload = {
            "group": key.to_json(),
            "ols": ols.to_json(),
            "sdm": sdm.to_json(),
            "moran_ols": morans_i(ols.residuals, w).to_json(),
            "moran_sdm": morans_i(sdm.residuals, w).to_json(),
        }
    except ValueError as exc:
        fail("global-fit", str(exc))
    _dump(out / "global_fit.json", global_payload)

    bandwidth = config.get("bandwidth")
    try:
        if bandwidth is None:
            bandwidth = select_bandwidth(spec, frame, series, w)
        local = fit_gwr_sdm(spec, frame, series, w, int(bandwidth))
    except ValueError as exc:
        fail("local-fit", str(exc))
    _dump(out / "local_fit.json", local.to_json())
    log["stages"].append({"stage": "local-fit", "bandwidth": int(bandwidth)})

    k = int(config.get("k", DEFAULT_K))
    try:
        features, feat_names, included = build_features(local, frame, spec.independents)
        contig = build_contiguity(frame.meta(), rule=config.get("contiguity", "queen"))
        sub_contig = contig.subset(included) if len(included) < frame.n else contig
        _tree, reg = constrained_cluster(features, sub_contig, k=k)
        reg.feature_names = feat_names
        reg.included = included
    except ValueError as exc:
        fail("regionalize", str(exc))
    _dump(out / "regionalization.json", reg.to_json())
    log["stages"].append({"stage": "regionalize", "k": int(reg.k)})

    pairs = pairwise_spillover(local, w)
    field = bin_directions(pairs, frame.meta())
    cluster_spill = aggregate_clusters(field, reg)
    _dump(
        out / "spillover.json",
        {
            "field": field.to_json(),
            "clusters": cluster_spill.to_json(),
            "skipped_pairs": pairs.skipped_pairs,
        },
    )

    variables = list(spec.independents) + [rate_variable(behavior)]
    _dump(out / "projection.json", projection_payload(aug, local, reg, variables))
    log["stages"].append({"stage": "payloads", "files": 6})

    _dump(out / "run_log.json", log)
    return out


def _dump(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def correlation_payload(frame: SpatialFrame, variables) -> dict:
    return correlation_matrix(frame, variables).to_json()
