"""Aggregate existing thermal units into clusters per (zone, tech)."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby

import numpy as np

from cemkit.domain import ResourceCluster, TechClass
from cemkit.errors import InvalidParameterError


@dataclass(frozen=True)
class RawUnitRecord:
    unit_id: str
    zone: str
    tech: str
    capacity: float  # MW
    heat_rate: float  # MMBTU/MWh
    fixed_om: float  # $/kW-yr
    build_year: int
    variable_om: float = 0.0
    lifetime_years: int = 40
    profile: str | None = None
    cluster: str | None = None  # pre-assigned cluster id, bypasses k-means

    def __post_init__(self):
        if self.capacity <= 0:
            raise InvalidParameterError(f"unit {self.unit_id}: capacity must be > 0")
        if self.heat_rate < 0:
            raise InvalidParameterError(f"unit {self.unit_id}: heat_rate must be >= 0")


def _standardize(x: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    return (x - mu) / sd


def kmeans_groups(features: np.ndarray, capacity: np.ndarray, ids: list[str], k: int) -> list[list[int]]:
    """Deterministic Lloyd iterations on standardized features.

    Seeds are the k largest units by capacity (ties -> ascending id). Returns
    member index lists, empty clusters dropped, ordered by first member.
    """
    n = len(ids)
    if k >= n:
        return [[i] for i in range(n)]
    z = _standardize(np.asarray(features, dtype=float))
    order = sorted(range(n), key=lambda i: (-capacity[i], ids[i]))
    centers = z[order[:k]].copy()
    assign = None
    for _ in range(300):
        d = ((z[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = d.argmin(axis=1)  # ties go to the lowest center index
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for j in range(k):
            members = assign == j
            if members.any():
                centers[j] = z[members].mean(axis=0)
    groups = [sorted(np.flatnonzero(assign == j).tolist()) for j in range(k)]
    groups = [g for g in groups if g]
    return sorted(groups, key=lambda g: g[0])


def _weighted(values, weights):
    values = [float(v) for v in values]
    if all(v == values[0] for v in values):
        return values[0]
    return float(np.dot(values, weights) / np.sum(weights))


def _make_cluster(cid, zone, tech, members, profiles):
    caps = [u.capacity for u in members]
    life = max(u.lifetime_years for u in members)
    # shift vintage years so that build_year + cluster life = unit retirement year
    vintages = tuple((u.build_year + u.lifetime_years - life, float(u.capacity)) for u in members)
    profile_name = members[0].profile
    hr = _weighted([u.heat_rate for u in members], caps)
    return ResourceCluster(
        id=cid,
        zone=zone,
        tech=tech,
        existing_capacity=float(sum(caps)),
        build_year=min(v[0] for v in vintages),
        lifetime_years=int(life),
        new_build_allowed=False,
        max_new_capacity=0.0,
        fixed_om=_weighted([u.fixed_om for u in members], caps),
        variable_om=_weighted([u.variable_om for u in members], caps),
        profile=None if profile_name is None else profiles[profile_name],
        existing_vintages=vintages,
        heat_rate=None if hr == tech.heat_rate else hr,
    )


def cluster_units(
    units: list[RawUnitRecord],
    clusters_per_tech_zone: int,
    techs: dict[str, TechClass] | None = None,
    profiles: dict | None = None,
) -> list[ResourceCluster]:
    """Cluster existing units on (heat rate, fixed O&M) within each tech-zone group.

    Units carrying a pre-assigned ``cluster`` id are grouped by that id instead.
    Cluster capacity is the member sum; heat rate and costs are
    capacity-weighted means.
    """
    if clusters_per_tech_zone < 1:
        raise InvalidParameterError("clusters_per_tech_zone must be >= 1")
    if not units:
        return []
    techs = techs or {}
    profiles = profiles or {}

    def tech_of(name):
        return techs.get(name) or TechClass(name=name)

    out = []
    preset = [u for u in units if u.cluster]
    free = [u for u in units if not u.cluster]

    for cid in sorted({u.cluster for u in preset}):
        members = [u for u in preset if u.cluster == cid]
        zones = {u.zone for u in members}
        if len(zones) != 1 or len({u.tech for u in members}) != 1:
            raise InvalidParameterError(f"cluster {cid}: members span several zones or techs")
        out.append(_make_cluster(cid, members[0].zone, tech_of(members[0].tech), members, profiles))

    key = lambda u: (u.zone, u.tech, u.profile or "")
    for (zone, tech, _), grp in groupby(sorted(free, key=lambda u: (key(u), u.unit_id)), key=key):
        grp = list(grp)
        feats = np.array([[u.heat_rate, u.fixed_om] for u in grp])
        caps = np.array([u.capacity for u in grp])
        groups = kmeans_groups(feats, caps, [u.unit_id for u in grp], clusters_per_tech_zone)
        for i, g in enumerate(groups, start=1):
            cid = f"{zone}_{tech}{'_' + grp[0].profile if grp[0].profile else ''}_{i}"
            out.append(_make_cluster(cid, zone, tech_of(tech), [grp[j] for j in g], profiles))
    return out
