"""Capacity carried between myopic periods: vintages, builds, corridor expansions."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Mapping

from cemkit.domain import SystemData
from cemkit.errors import InvalidParameterError

_EPS = 1e-9


@dataclass(frozen=True)
class Vintage:
    cluster: str
    build_year: int
    power: float  # MW
    energy: float = 0.0  # MWh, storage only
    period: str | None = None  # build period label; None for pre-study stock


@dataclass(frozen=True)
class BuildRecord:
    """One investment decision; its annuity is charged from ``period`` to the end of the study."""

    cluster: str
    period: str
    power: float
    energy: float = 0.0


@dataclass(frozen=True)
class CarriedState:
    vintages: tuple = ()
    corridor_capacity: Mapping[str, float] = field(default_factory=dict)
    builds: tuple = ()
    corridor_builds: tuple = ()  # (corridor id, period label, MW)
    retired: Mapping[str, float] = field(default_factory=dict)  # cumulative MW by cluster

    def __post_init__(self):
        object.__setattr__(self, "vintages", tuple(self.vintages))
        object.__setattr__(self, "corridor_capacity", dict(self.corridor_capacity))
        object.__setattr__(self, "retired", dict(self.retired))
        for v in self.vintages:
            if v.power < -_EPS or v.energy < -_EPS:
                raise InvalidParameterError(f"vintage of {v.cluster}: negative capacity")
        if any(mw < -_EPS for mw in self.corridor_capacity.values()):
            raise InvalidParameterError("negative corridor capacity")

    @classmethod
    def initial(cls, system: SystemData) -> "CarriedState":
        vintages = []
        for c in system.clusters:
            if c.is_storage:
                st = c.storage
                if st.existing_power > 0 or st.existing_energy > 0:
                    vintages.append(Vintage(c.id, c.build_year, st.existing_power, st.existing_energy))
            else:
                vintages.extend(Vintage(c.id, y, mw) for y, mw in c.existing_vintages if mw > 0)
        return cls(vintages=tuple(vintages), corridor_capacity={k.id: k.existing_capacity for k in system.corridors})

    def installed(self, cluster_id: str) -> float:
        return float(sum(v.power for v in self.vintages if v.cluster == cluster_id))

    def energy(self, cluster_id: str) -> float:
        return float(sum(v.energy for v in self.vintages if v.cluster == cluster_id))

    def built(self, cluster_id: str) -> float:
        """Cumulative new-build MW, counted against ``max_new_capacity``."""
        return float(sum(b.power for b in self.builds if b.cluster == cluster_id))

    def aged(self, system: SystemData, rep_year: int, age_generators: bool = True) -> "CarriedState":
        """Drop vintages with ``build_year + lifetime <= rep_year`` (the boundary year retires).

        Storage always ages; generators only when ``age_generators`` (age-based mode).
        """
        keep, retired = [], defaultdict(float, self.retired)
        for v in self.vintages:
            c = system.cluster(v.cluster)
            if (age_generators or c.is_storage) and v.build_year + c.lifetime_years <= rep_year:
                retired[v.cluster] += v.power
            else:
                keep.append(v)
        if len(keep) == len(self.vintages):
            return self
        return replace(self, vintages=tuple(keep), retired=dict(retired))

    def retain(self, cluster_id: str, target: float) -> "CarriedState":
        """Cut a cluster's ledger down to ``target`` MW, retiring the oldest vintages first."""
        have = self.installed(cluster_id)
        cut = have - max(target, 0.0)
        if cut <= _EPS * max(1.0, have):
            return self
        idx = sorted((i for i, v in enumerate(self.vintages) if v.cluster == cluster_id),
                     key=lambda i: self.vintages[i].build_year)
        taken = {}
        for i in idx:
            if cut <= 0:
                break
            taken[i] = min(self.vintages[i].power, cut)
            cut -= taken[i]
        out = []
        for i, v in enumerate(self.vintages):
            left = v.power - taken.get(i, 0.0)
            if i not in taken:
                out.append(v)
            elif left > _EPS:
                out.append(replace(v, power=left, energy=v.energy * left / v.power))
        retired = dict(self.retired)
        retired[cluster_id] = retired.get(cluster_id, 0.0) + have - sum(v.power for v in out if v.cluster == cluster_id)
        return replace(self, vintages=tuple(out), retired=retired)

    def with_builds(self, period_label: str, rep_year: int, power: Mapping[str, float],
                    energy: Mapping[str, float] | None = None) -> "CarriedState":
        energy = energy or {}
        new_v, new_b = [], []
        for cid in sorted(set(power) | set(energy)):
            p, e = power.get(cid, 0.0), energy.get(cid, 0.0)
            if p > _EPS or e > _EPS:
                new_v.append(Vintage(cid, rep_year, p, e, period_label))
                new_b.append(BuildRecord(cid, period_label, p, e))
        if not new_v:
            return self
        return replace(self, vintages=self.vintages + tuple(new_v), builds=self.builds + tuple(new_b))

    def with_corridor_builds(self, period_label: str, expansion: Mapping[str, float]) -> "CarriedState":
        added = {k: mw for k, mw in sorted(expansion.items()) if mw > _EPS}
        if not added:
            return self
        caps = dict(self.corridor_capacity)
        for k, mw in added.items():
            caps[k] = caps.get(k, 0.0) + mw
        rec = tuple((k, period_label, mw) for k, mw in added.items())
        return replace(self, corridor_capacity=caps, corridor_builds=self.corridor_builds + rec)
