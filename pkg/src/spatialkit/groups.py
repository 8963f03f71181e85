"""Social-group enumeration and per-unit rate aggregation.

A group is a conjunction of demographic selectors (e.g. race=asian AND
edu=no_college). Aggregation pools counts across matching subgroup rows
within each unit: rate = sum(behavior counts) / sum(population), never a
mean of row rates. Units whose pooled population falls below ``min_pop``
are flagged missing (tiny denominators make rates unstable).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .geodata import SubgroupDataset

DEFAULT_MIN_POP = 10

__all__ = ["GroupKey", "GroupSeries", "enumerate_groups", "aggregate_rate", "DEFAULT_MIN_POP"]


@dataclass(frozen=True)
class GroupKey:
    """Ordered demographic selectors identifying one social group."""

    selectors: tuple[tuple[str, str], ...]

    @classmethod
    def from_mapping(cls, mapping) -> "GroupKey":
        return cls(selectors=tuple((str(k), str(v)) for k, v in mapping.items()))

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.selectors)

    def label(self) -> str:
        if not self.selectors:
            return "(all)"
        return ", ".join(f"{a}={v}" for a, v in self.selectors)

    def to_json(self) -> dict:
        return dict(self.selectors)


@dataclass
class GroupSeries:
    group: GroupKey
    rate: np.ndarray  # NaN where below min_pop
    population: np.ndarray
    coverage: float
    unit_ids: list[str]
    min_pop: int

    @property
    def n(self) -> int:
        return len(self.unit_ids)

    def defined(self) -> np.ndarray:
        return np.isfinite(self.rate)


def enumerate_groups(attrs, sd: SubgroupDataset) -> list[GroupKey]:
    """Cartesian product of observed levels, in lexicographic order."""
    attrs = list(attrs)
    if not attrs:
        raise ValueError("attrs must be nonempty")
    unknown = [a for a in attrs if a not in sd.demographic]
    if unknown:
        raise KeyError(f"unknown demographic attribute(s): {', '.join(unknown)}")
    level_lists = [sd.levels(a) for a in attrs]
    return [GroupKey(selectors=tuple(zip(attrs, combo))) for combo in product(*level_lists)]


def aggregate_rate(
    sd: SubgroupDataset,
    group: GroupKey,
    behavior: str,
    min_pop: int = DEFAULT_MIN_POP,
    unit_ids: list[str] | None = None,
) -> GroupSeries:
    """Pooled behavior rate per unit for one group.

    Vectors align to ``unit_ids`` (default: sorted ids observed in the
    subgroup data). Raises if the group matches no rows at all.
    """
    if behavior not in sd.behavioral:
        raise KeyError(f"unknown behavior: {behavior!r}")
    table = sd.table
    mask = np.ones(len(table), dtype=bool)
    for attr, level in group.selectors:
        if attr not in sd.demographic:
            raise KeyError(f"unknown demographic attribute: {attr!r}")
        mask &= table[attr].astype(str).to_numpy() == level
    if not mask.any():
        raise ValueError(f"group {group.label()} matches no subgroup rows")

    matched = table.loc[mask]
    pooled = matched.groupby("unit_id").agg(pop=("population", "sum"), count=(behavior, "sum"))

    if unit_ids is None:
        unit_ids = sorted(table["unit_id"].unique())
    pop = np.zeros(len(unit_ids))
    count = np.zeros(len(unit_ids))
    index = {uid: k for k, uid in enumerate(unit_ids)}
    for uid, row in pooled.iterrows():
        k = index.get(uid)
        if k is not None:
            pop[k] = row["pop"]
            count[k] = row["count"]

    rate = np.full(len(unit_ids), np.nan)
    ok = pop >= min_pop
    rate[ok] = count[ok] / pop[ok]
    coverage = float(ok.mean()) if len(unit_ids) else 0.0
    return GroupSeries(
        group=group,
        rate=rate,
        population=pop.astype(int),
        coverage=coverage,
        unit_ids=list(unit_ids),
        min_pop=min_pop,
    )
