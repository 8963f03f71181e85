"""Ingestion and joining of the three dataset kinds.

Three inputs feed every analysis: a geometry file (GeoJSON FeatureCollection,
one feature per spatial unit), a census table (CSV, one row per unit, numeric
columns), and an optional subgroup table (CSV, one row per unit x demographic
profile, with a population count and behavioral counts). ``join_frame`` inner
joins them on the unit id into a :class:`SpatialFrame` whose vectors are all
aligned to one unit order.

Centroids and inter-unit distances are computed in a planar equirectangular
projection about the dataset's mean latitude. That is adequate at county
scale; it is not suitable for continental extents.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

EARTH_RADIUS_M = 6_371_008.8

__all__ = [
    "MetaDataset",
    "CensusDataset",
    "SubgroupDataset",
    "SpatialFrame",
    "JoinReport",
    "GeometryError",
    "load_geometry",
    "load_census",
    "load_subgroups",
    "join_frame",
    "minmax_normalize",
]


class GeometryError(ValueError):
    """Raised when a geometry file fails validation; carries per-feature errors."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors or [])


@dataclass(frozen=True)
class SpatialUnit:
    unit_id: str
    geometry: dict  # GeoJSON Polygon or MultiPolygon mapping, lon-lat degrees
    centroid_xy: tuple[float, float]  # planar meters
    centroid_lonlat: tuple[float, float]


@dataclass
class MetaDataset:
    """Validated geometries plus planar centroids, one entry per spatial unit."""

    units: list[SpatialUnit]
    mean_latitude: float

    @property
    def unit_ids(self) -> list[str]:
        return [u.unit_id for u in self.units]

    @property
    def centroids(self) -> np.ndarray:
        return np.array([u.centroid_xy for u in self.units], dtype=float)

    def __len__(self) -> int:
        return len(self.units)


@dataclass
class CensusDataset:
    """One row per unit id; columns are numeric environment variables."""

    table: pd.DataFrame  # indexed by unit_id

    @property
    def variables(self) -> list[str]:
        return list(self.table.columns)


@dataclass
class SubgroupDataset:
    """One row per (unit, demographic profile); counts stay aggregated.

    ``behavioral`` columns record how many members of the row exhibited the
    behavior, so each count is bounded by the row population.
    """

    table: pd.DataFrame
    demographic: list[str]
    behavioral: list[str]
    socioeconomic: list[str] = field(default_factory=list)

    def levels(self, attr: str) -> list[str]:
        if attr not in self.demographic:
            raise KeyError(f"unknown demographic attribute: {attr!r}")
        return sorted(self.table[attr].astype(str).unique())


@dataclass
class JoinReport:
    dropped_from_geometry: list[str]
    dropped_from_census: list[str]
    dropped_from_subgroups: list[str]
    dropped_missing_values: list[str]

    def to_json(self) -> dict:
        return {
            "dropped_from_geometry": self.dropped_from_geometry,
            "dropped_from_census": self.dropped_from_census,
            "dropped_from_subgroups": self.dropped_from_subgroups,
            "dropped_missing_values": self.dropped_missing_values,
        }


@dataclass
class SpatialFrame:
    """Joined geometry + per-unit attribute vectors, all aligned to ``unit_ids``."""

    unit_ids: list[str]
    units: list[SpatialUnit]
    variables: dict[str, np.ndarray]
    mean_latitude: float
    report: JoinReport | None = None

    @property
    def n(self) -> int:
        return len(self.unit_ids)

    @property
    def centroids(self) -> np.ndarray:
        return np.array([u.centroid_xy for u in self.units], dtype=float)

    def variable(self, name: str) -> np.ndarray:
        if name not in self.variables:
            raise KeyError(f"unknown variable: {name!r}")
        return self.variables[name]

    def meta(self) -> MetaDataset:
        """The geometry subset backing this frame, in frame order."""
        return MetaDataset(units=list(self.units), mean_latitude=self.mean_latitude)


# ---------------------------------------------------------------------------
# geometry loading and validation


def _ring_coords(ring) -> list[tuple[float, float]]:
    return [(float(x), float(y)) for x, y in ring]


def _segments_intersect(p1, p2, p3, p4) -> bool:
    # Proper crossing test; touching at shared endpoints is allowed.
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > 0:
            return 1
        if v < 0:
            return -1
        return 0

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    return False


def _validate_ring(ring) -> str | None:
    if len(ring) < 4:
        return "ring has fewer than 4 coordinates"
    if ring[0] != ring[-1]:
        return "ring is not closed"
    distinct = set(ring[:-1])
    if len(distinct) < 3:
        return "ring has fewer than 3 distinct vertices"
    segs = [(ring[i], ring[i + 1]) for i in range(len(ring) - 1)]
    for i in range(len(segs)):
        for j in range(i + 2, len(segs)):
            if i == 0 and j == len(segs) - 1:
                continue  # first and last share the closing vertex
            if _segments_intersect(*segs[i], *segs[j]):
                return f"self-intersection between segments {i} and {j}"
    return None


def _polygons_of(geometry: dict) -> list[list[list[tuple[float, float]]]]:
    """Return list of polygons, each a list of rings (exterior first)."""
    gtype = geometry.get("type")
    if gtype == "Polygon":
        return [[_ring_coords(r) for r in geometry["coordinates"]]]
    if gtype == "MultiPolygon":
        return [[_ring_coords(r) for r in poly] for poly in geometry["coordinates"]]
    raise GeometryError(f"unsupported geometry type: {gtype!r}")


def _project(lon, lat, mean_lat_rad: float):
    x = EARTH_RADIUS_M * math.cos(mean_lat_rad) * math.radians(lon)
    y = EARTH_RADIUS_M * math.radians(lat)
    return x, y


def _unproject(x, y, mean_lat_rad: float):
    lon = math.degrees(x / (EARTH_RADIUS_M * math.cos(mean_lat_rad)))
    lat = math.degrees(y / EARTH_RADIUS_M)
    return lon, lat


def _polygon_centroid_area(rings_xy) -> tuple[float, float, float]:
    """Shoelace centroid of one polygon with holes; returns (cx, cy, area)."""
    a_total = 0.0
    cx = 0.0
    cy = 0.0
    for ring in rings_xy:
        a = 0.0
        sx = 0.0
        sy = 0.0
        for (x0, y0), (x1, y1) in zip(ring[:-1], ring[1:]):
            cross = x0 * y1 - x1 * y0
            a += cross
            sx += (x0 + x1) * cross
            sy += (y0 + y1) * cross
        a_total += a / 2.0
        cx += sx / 6.0
        cy += sy / 6.0
    if a_total == 0.0:
        # Degenerate (zero-area) polygon: fall back to vertex mean.
        pts = [p for ring in rings_xy for p in ring[:-1]]
        return (
            sum(p[0] for p in pts) / len(pts),
            sum(p[1] for p in pts) / len(pts),
            0.0,
        )
    return cx / a_total, cy / a_total, a_total


def _geometry_centroid_xy(geometry: dict, mean_lat_rad: float):
    parts = []
    for rings in _polygons_of(geometry):
        rings_xy = [[_project(lon, lat, mean_lat_rad) for lon, lat in ring] for ring in rings]
        parts.append(_polygon_centroid_area(rings_xy))
    total_area = sum(abs(a) for _, _, a in parts)
    if total_area == 0.0:
        xs = [cx for cx, _, _ in parts]
        ys = [cy for _, cy, _ in parts]
        return sum(xs) / len(xs), sum(ys) / len(ys)
    cx = sum(cx * abs(a) for cx, _, a in parts) / total_area
    cy = sum(cy * abs(a) for _, cy, a in parts) / total_area
    return cx, cy


def load_geometry(path, id_property: str = "unit_id") -> MetaDataset:
    """Load and validate a GeoJSON FeatureCollection into a MetaDataset.

    Every feature must carry the unit-id property and a valid Polygon or
    MultiPolygon: rings closed, at least 3 distinct vertices, and no
    self-intersections. Planar centroids are computed in an equirectangular
    projection about the dataset's mean vertex latitude (meters).

    Raises :class:`GeometryError` listing every offending feature if any
    geometry is malformed, and on duplicate unit ids (naming them).
    """
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise GeometryError("expected a GeoJSON FeatureCollection")
    features = doc.get("features", [])
    if not features:
        raise GeometryError("FeatureCollection contains no features")

    errors = []
    seen: dict[str, int] = {}
    parsed = []
    lat_sum, lat_n = 0.0, 0
    for idx, feat in enumerate(features):
        props = feat.get("properties") or {}
        uid = props.get(id_property)
        label = f"feature {idx}" + (f" (id={uid})" if uid is not None else "")
        if uid is None:
            errors.append(f"{label}: missing {id_property!r} property")
            continue
        uid = str(uid)
        seen[uid] = seen.get(uid, 0) + 1
        geometry = feat.get("geometry")
        if not geometry:
            errors.append(f"{label}: missing geometry")
            continue
        try:
            polys = _polygons_of(geometry)
        except GeometryError as exc:
            errors.append(f"{label}: {exc}")
            continue
        bad = None
        for rings in polys:
            for ring in rings:
                bad = _validate_ring(ring)
                if bad:
                    break
            if bad:
                break
        if bad:
            errors.append(f"{label}: {bad}")
            continue
        for rings in polys:
            for ring in rings:
                for _, lat in ring[:-1]:
                    lat_sum += lat
                    lat_n += 1
        parsed.append((uid, geometry))

    duplicates = sorted(uid for uid, count in seen.items() if count > 1)
    if duplicates:
        raise GeometryError(
            f"duplicate unit ids: {', '.join(duplicates)}", errors=[f"duplicate id {d}" for d in duplicates]
        )
    if errors:
        raise GeometryError(f"{len(errors)} invalid feature(s)", errors=errors)

    mean_lat = lat_sum / lat_n
    mean_lat_rad = math.radians(mean_lat)
    units = []
    for uid, geometry in parsed:
        cx, cy = _geometry_centroid_xy(geometry, mean_lat_rad)
        lonlat = _unproject(cx, cy, mean_lat_rad)
        units.append(SpatialUnit(unit_id=uid, geometry=geometry, centroid_xy=(cx, cy), centroid_lonlat=lonlat))

    md = MetaDataset(units=units, mean_latitude=mean_lat)
    _check_centroids_in_bbox(md, mean_lat_rad)
    return md


def _check_centroids_in_bbox(md: MetaDataset, mean_lat_rad: float) -> None:
    for unit in md.units:
        xs, ys = [], []
        for rings in _polygons_of(unit.geometry):
            for ring in rings:
                for lon, lat in ring[:-1]:
                    x, y = _project(lon, lat, mean_lat_rad)
                    xs.append(x)
                    ys.append(y)
        cx, cy = unit.centroid_xy
        eps = 1e-6
        if not (min(xs) - eps <= cx <= max(xs) + eps and min(ys) - eps <= cy <= max(ys) + eps):
            raise GeometryError(f"centroid of unit {unit.unit_id} falls outside its bounding box")


# ---------------------------------------------------------------------------
# tabular loading


def load_census(path, id_col: str = "unit_id") -> CensusDataset:
    """Load a census CSV: one row per unit, numeric variable columns."""
    df = pd.read_csv(path, dtype={id_col: str})
    if id_col not in df.columns:
        raise ValueError(f"census file lacks id column {id_col!r}")
    if df[id_col].duplicated().any():
        dups = sorted(df.loc[df[id_col].duplicated(), id_col].unique())
        raise ValueError(f"census file has duplicate unit ids: {', '.join(dups)}")
    df = df.set_index(id_col)
    for col in df.columns:
        df[col] = pd.to_numeric(df[col], errors="coerce")
    return CensusDataset(table=df)


def load_subgroups(
    path,
    behaviors: list[str],
    id_col: str = "unit_id",
    pop_col: str = "population",
    socioeconomic: list[str] | None = None,
) -> SubgroupDataset:
    """Load a subgroup CSV; non-id, non-count columns are demographic attributes."""
    df = pd.read_csv(path, dtype={id_col: str})
    missing = [c for c in [id_col, pop_col, *behaviors] if c not in df.columns]
    if missing:
        raise ValueError(f"subgroup file lacks column(s): {', '.join(missing)}")
    socioeconomic = list(socioeconomic or [])
    demographic = [c for c in df.columns if c not in {id_col, pop_col, *behaviors, *socioeconomic}]
    df = df.rename(columns={id_col: "unit_id", pop_col: "population"})
    df["population"] = df["population"].astype(int)
    if (df["population"] < 0).any():
        raise ValueError("negative population count")
    for b in behaviors:
        df[b] = df[b].astype(int)
        over = df[b] > df["population"]
        if over.any():
            rows = df.loc[over, "unit_id"].tolist()[:5]
            raise ValueError(f"behavioral count {b!r} exceeds population in unit(s) {rows}")
    key_cols = ["unit_id", *demographic]
    dup = df.duplicated(subset=key_cols)
    if dup.any():
        rows = df.loc[dup, key_cols].astype(str).agg("/".join, axis=1).tolist()[:5]
        raise ValueError(f"duplicate (unit, demographic profile) rows: {rows}")
    return SubgroupDataset(table=df, demographic=demographic, behavioral=list(behaviors), socioeconomic=socioeconomic)


# ---------------------------------------------------------------------------
# join + normalization


def join_frame(
    md: MetaDataset,
    cd: CensusDataset,
    sd: SubgroupDataset | None = None,
) -> tuple[SpatialFrame, JoinReport]:
    """Inner join the datasets on unit id, aligned to the geometry order.

    Census rows containing missing values are dropped (reported, never
    imputed). Raises ValueError when the id intersection is empty.
    """
    if len(md) == 0 or len(cd.table) == 0:
        raise ValueError("cannot join empty datasets")

    geo_ids = md.unit_ids
    table = cd.table
    complete = table.dropna()
    dropped_missing = sorted(set(table.index) - set(complete.index))

    keep = set(complete.index)
    if sd is not None:
        keep &= set(sd.table["unit_id"])
    joined_ids = [uid for uid in geo_ids if uid in keep]
    if not joined_ids:
        raise ValueError("join produced no units: no unit ids are shared by all inputs")

    joined_set = set(joined_ids)
    report = JoinReport(
        dropped_from_geometry=sorted(set(geo_ids) - joined_set),
        dropped_from_census=sorted(set(table.index) - joined_set),
        dropped_from_subgroups=sorted(set(sd.table["unit_id"]) - joined_set) if sd is not None else [],
        dropped_missing_values=dropped_missing,
    )

    sub = complete.loc[joined_ids]
    variables = {col: sub[col].to_numpy(dtype=float) for col in sub.columns}
    units = [u for u in md.units if u.unit_id in joined_set]
    frame = SpatialFrame(
        unit_ids=joined_ids,
        units=units,
        variables=variables,
        mean_latitude=md.mean_latitude,
        report=report,
    )
    return frame, report


def minmax_normalize(values) -> np.ndarray:
    """Scale a vector to [0, 1]; a constant vector maps to all 0.5.

    NaNs are ignored when finding the range and propagate to the output.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot normalize an empty vector")
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        return np.full_like(arr, np.nan)
    lo, hi = finite.min(), finite.max()
    if hi == lo:
        out = np.full_like(arr, 0.5)
        out[~np.isfinite(arr)] = np.nan
        return out
    return (arr - lo) / (hi - lo)
