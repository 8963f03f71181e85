"""Seeded generators for lattices and planted-parameter datasets."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..geodata import (
    EARTH_RADIUS_M,
    CensusDataset,
    MetaDataset,
    SpatialUnit,
    SubgroupDataset,
)
from ..weights import WeightsMatrix

__all__ = [
    "SynthManifest",
    "gen_lattice",
    "gen_sdm",
    "gen_gwr",
    "gen_subgroups",
    "meta_to_geojson",
    "write_fixture",
    "make_demo_fixture",
]


@dataclass
class SynthManifest:
    """Everything needed to regenerate a fixture bit-identically."""

    seed: int
    rows: int
    cols: int
    cell_size_m: float
    beta: list[float] = field(default_factory=list)
    rho: float | None = None
    gamma: list[float] = field(default_factory=list)
    noise_sd: float = 0.0
    schema: dict[str, list[str]] = field(default_factory=dict)
    behavior: str = "voted"
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def gen_lattice(rows: int, cols: int, cell_size_m: float = 500.0) -> MetaDataset:
    """Square-cell lattice centered on the equator; ids are "r{i}c{j}".

    Cell edges are chosen so the planar (equirectangular) footprint is
    exactly rows x cols cells of the requested size in meters.
    """
    if rows * cols < 4:
        raise ValueError("lattice needs at least 4 cells")
    ddeg = math.degrees(cell_size_m / EARTH_RADIUS_M)
    mean_lat_rad = 0.0  # symmetric about the equator by construction

    # Shared grid lines: adjacent cells must reference bit-identical
    # coordinates or exact-match contiguity detection falls apart.
    lons = [(t - cols / 2.0) * ddeg for t in range(cols + 1)]
    lats = [(t - rows / 2.0) * ddeg for t in range(rows + 1)]

    def project(lon, lat):
        return (
            EARTH_RADIUS_M * math.cos(mean_lat_rad) * math.radians(lon),
            EARTH_RADIUS_M * math.radians(lat),
        )

    units = []
    for i in range(rows):
        for j in range(cols):
            w, e = lons[j], lons[j + 1]
            s, n = lats[i], lats[i + 1]
            ring = [[w, s], [e, s], [e, n], [w, n], [w, s]]
            lon_c, lat_c = (w + e) / 2.0, (s + n) / 2.0
            units.append(
                SpatialUnit(
                    unit_id=f"r{i}c{j}",
                    geometry={"type": "Polygon", "coordinates": [ring]},
                    centroid_xy=project(lon_c, lat_c),
                    centroid_lonlat=(lon_c, lat_c),
                )
            )
    return MetaDataset(units=units, mean_latitude=0.0)


def gen_sdm(
    md: MetaDataset,
    w: WeightsMatrix,
    beta,
    rho: float,
    gamma,
    noise_sd: float,
    seed: int,
    intercept: float = 0.0,
) -> tuple[CensusDataset, np.ndarray]:
    """Draw X ~ N(0,1) and solve the spatial Durbin process exactly.

    y = (I - rho W)^-1 (intercept + X beta + W X gamma + eps); requires
    |rho| < 1 and a row-standardized W so the system is nonsingular.
    """
    if abs(rho) >= 1:
        raise ValueError("|rho| must be < 1")
    if not w.row_standardized:
        raise ValueError("gen_sdm expects a row-standardized weights matrix")
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    n = len(md)
    p = len(beta)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    eps = rng.normal(0.0, noise_sd, n) if noise_sd > 0 else np.zeros(n)

    dense_w = w.matrix.toarray()
    rhs = intercept + x @ beta + dense_w @ x @ gamma + eps
    y = np.linalg.solve(np.eye(n) - rho * dense_w, rhs)

    table = pd.DataFrame(x, columns=[f"x{j + 1}" for j in range(p)], index=pd.Index(md.unit_ids, name="unit_id"))
    return CensusDataset(table=table), y


def gen_gwr(
    md: MetaDataset,
    surfaces: dict,
    noise_sd: float,
    seed: int,
    intercept=None,
) -> tuple[CensusDataset, np.ndarray, dict[str, np.ndarray]]:
    """Per-unit coefficient surfaces: y_i = sum_v beta_v(u_i, v_i) x_iv + eps_i.

    ``surfaces`` maps variable name -> callable(u, v) evaluated at planar
    centroids. Returns the census table, the response, and the true
    coefficient vectors for recovery checks.
    """
    n = len(md)
    coords = md.centroids
    rng = np.random.default_rng(seed)
    names = list(surfaces)
    x = rng.standard_normal((n, len(names)))
    true = {}
    y = np.zeros(n)
    for j, name in enumerate(names):
        coef = np.array([float(surfaces[name](u, v)) for u, v in coords])
        true[name] = coef
        y += coef * x[:, j]
    if intercept is not None:
        base = np.array([float(intercept(u, v)) for u, v in coords])
        true["intercept"] = base
        y += base
    if noise_sd > 0:
        y += rng.normal(0.0, noise_sd, n)
    table = pd.DataFrame(x, columns=names, index=pd.Index(md.unit_ids, name="unit_id"))
    return CensusDataset(table=table), y, true


def gen_subgroups(
    md: MetaDataset,
    schema: dict,
    rates: dict,
    pops=60,
    seed: int = 0,
    behavior: str = "voted",
) -> SubgroupDataset:
    """One row per unit x demographic combination with planted rates.

    ``rates`` maps a tuple of levels (in schema attribute order) to either a
    scalar rate or a per-unit vector. Behavioral counts are round(rate *
    population), so pooled aggregation recovers the planted rates exactly up
    to rounding.
    """
    attrs = list(schema)
    combos = [()]
    for a in attrs:
        combos = [c + (str(lv),) for c in combos for lv in schema[a]]
    rng = np.random.default_rng(seed)
    n = len(md)

    records = []
    for combo in combos:
        rate = rates[combo]
        rate_vec = np.full(n, float(rate)) if np.isscalar(rate) else np.asarray(rate, dtype=float)
        if rate_vec.min() < 0 or rate_vec.max() > 1:
            raise ValueError(f"rates for group {combo} outside [0, 1]")
        if isinstance(pops, int):
            pop_vec = np.full(n, pops, dtype=int)
        else:
            lo, hi = pops
            pop_vec = rng.integers(lo, hi + 1, size=n)
        counts = np.rint(rate_vec * pop_vec).astype(int)
        for idx, uid in enumerate(md.unit_ids):
            rec = {"unit_id": uid}
            rec.update(dict(zip(attrs, combo)))
            rec["population"] = int(pop_vec[idx])
            rec[behavior] = int(counts[idx])
            records.append(rec)
    table = pd.DataFrame.from_records(records)
    return SubgroupDataset(table=table, demographic=attrs, behavioral=[behavior])


# ---------------------------------------------------------------------------
# fixture output (exercises the real ingestion path)


def meta_to_geojson(md: MetaDataset, id_property: str = "unit_id") -> dict:
    features = [
        {
            "type": "Feature",
            "properties": {id_property: unit.unit_id},
            "geometry": unit.geometry,
        }
        for unit in md.units
    ]
    return {"type": "FeatureCollection", "features": features}


def write_fixture(
    outdir,
    md: MetaDataset,
    cd: CensusDataset,
    sd: SubgroupDataset | None,
    manifest: SynthManifest,
) -> Path:
    """Write meta.geojson + census.csv (+ subgroups.csv) + manifest.json."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "meta.geojson", "w") as fh:
        json.dump(meta_to_geojson(md), fh, sort_keys=True)
    cd.table.to_csv(out / "census.csv")
    if sd is not None:
        sd.table.to_csv(out / "subgroups.csv", index=False)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest.to_json(), fh, indent=2, sort_keys=True)
    return out


def make_demo_fixture(outdir, rows: int = 12, cols: int = 12, seed: int = 7, cell_size_m: float = 500.0) -> Path:
    """Reference fixture for the CLI, the service, and end-to-end tests.

    Census variables x1..x3 are standard normal draws. Six social groups
    (race x edu); the (asian, no_college) group's turnout carries a 2x2-cell
    block pattern, spatial structure at a scale the single-lag global model
    can only partly absorb, so the group tops the SDM-residual Moran
    ranking. Other groups get spatially unstructured rates.
    """
    from ..weights import build_gaussian, row_standardize

    md = gen_lattice(rows, cols, cell_size_m)
    w = row_standardize(build_gaussian(md, k=8))
    cd, _ = gen_sdm(
        md, w, beta=[1.0, -0.7, 0.4], rho=0.5, gamma=[0.3, -0.2, 0.1], noise_sd=0.05, seed=seed
    )
    n = len(md)
    rng = np.random.default_rng(seed + 1)
    x1 = cd.table["x1"].to_numpy()

    row_idx = np.array([int(uid.split("c")[0][1:]) for uid in md.unit_ids])
    col_idx = np.array([int(uid.split("c")[1]) for uid in md.unit_ids])
    block_values = rng.normal(0.0, 1.0, (rows // 2 + 1, cols // 2 + 1))
    block = block_values[row_idx // 2, col_idx // 2]
    target_rate = 0.5 + 0.4 * np.tanh(0.4 * x1 + block + rng.normal(0, 0.2, n))

    def plain_rate(shift):
        raw = 0.25 * x1 + rng.normal(0, 0.3, n) + shift
        return np.clip(0.5 + 0.25 * np.tanh(raw), 0.05, 0.95)

    schema = {"race": ["asian", "black", "white"], "edu": ["college", "no_college"]}
    rates = {}
    for i, race in enumerate(schema["race"]):
        for j, edu in enumerate(schema["edu"]):
            if race == "asian" and edu == "no_college":
                rates[(race, edu)] = target_rate
            else:
                rates[(race, edu)] = plain_rate(0.1 * i - 0.1 * j)
    sd = gen_subgroups(md, schema, rates, pops=(40, 120), seed=seed + 2)

    manifest = SynthManifest(
        seed=seed,
        rows=rows,
        cols=cols,
        cell_size_m=cell_size_m,
        beta=[1.0, -0.7, 0.4],
        rho=0.5,
        gamma=[0.3, -0.2, 0.1],
        noise_sd=0.05,
        schema=schema,
        behavior="voted",
        notes={"structured_group": {"race": "asian", "edu": "no_college"}},
    )
    return write_fixture(outdir, md, cd, sd, manifest)
