"""Representative-week selection by k-medoids on weekly summary features."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from cemkit.domain import SystemData
from cemkit.errors import InvalidParameterError

SAMPLING_SEED = 0  # recorded in run manifests; the swap search itself is deterministic


@dataclass(frozen=True)
class WeekSample:
    selected_week_indices: tuple  # 1-based, sorted
    weights: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.selected_week_indices)
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "selected_week_indices", idx)
        object.__setattr__(self, "weights", w)
        if len(idx) != len(w):
            raise InvalidParameterError("indices and weights differ in length")
        if list(idx) != sorted(set(idx)):
            raise InvalidParameterError("week indices must be distinct and sorted")
        if any(x <= 0 for x in w):
            raise InvalidParameterError("week weights must be positive")

    @classmethod
    def full_year(cls, n_weeks: int = 52) -> "WeekSample":
        return cls(tuple(range(1, n_weeks + 1)), (1.0,) * n_weeks)

    @property
    def zero_based(self) -> list[int]:
        return [i - 1 for i in self.selected_week_indices]

    def pairs(self):
        return list(zip(self.zero_based, self.weights))


def week_features(system: SystemData) -> np.ndarray:
    """One row per week: load mean and peak, then mean CF per (zone, variable tech)."""
    H, W = system.hours_per_week, system.n_weeks
    load = np.sum([z.demand[: W * H] for z in system.zones], axis=0).reshape(W, H)
    cols = [load.mean(axis=1), load.max(axis=1)]
    by_group = defaultdict(list)
    for c in system.generators:
        if c.tech.is_variable and c.profile is not None:
            by_group[(c.zone, c.tech.name)].append(c.profile[: W * H])
    for key in sorted(by_group):
        cf = np.mean(by_group[key], axis=0).reshape(W, H)
        cols.append(cf.mean(axis=1))
    x = np.column_stack(cols)
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    return (x - x.mean(axis=0)) / sd


def _total_cost(dist, medoids):
    return dist[:, medoids].min(axis=1).sum()


def kmedoids(dist: np.ndarray, init: list[int]) -> list[int]:
    """PAM swap phase from a given initial medoid set; best-improvement swaps."""
    medoids = list(init)
    best = _total_cost(dist, medoids)
    n = dist.shape[0]
    while True:
        improvement = None
        for mi in range(len(medoids)):
            for o in range(n):
                if o in medoids:
                    continue
                trial = medoids.copy()
                trial[mi] = o
                cost = _total_cost(dist, trial)
                if cost < best - 1e-12 and (improvement is None or cost < improvement[0] - 1e-12):
                    improvement = (cost, trial)
        if improvement is None:
            return sorted(medoids)
        best, medoids = improvement


def assign_weeks(dist: np.ndarray, medoids: list[int], tol: float = 1e-12) -> dict[int, int]:
    """Nearest-medoid counts. Exact ties are dealt round-robin so every medoid keeps weight."""
    counts = {m: 0 for m in medoids}
    d = dist[:, medoids]
    nearest = d.min(axis=1)
    groups = defaultdict(list)
    for w in range(dist.shape[0]):
        tied = tuple(m for m, dw in zip(medoids, d[w]) if dw <= nearest[w] + tol)
        groups[tied].append(w)
    for tied, weeks in sorted(groups.items()):
        for k, _ in enumerate(sorted(weeks)):
            counts[tied[k % len(tied)]] += 1
    return counts


def initial_medoids(system: SystemData, n_weeks: int) -> list[int]:
    """Weeks evenly spaced through the peak-load ranking."""
    H, W = system.hours_per_week, system.n_weeks
    load = np.sum([z.demand[: W * H] for z in system.zones], axis=0).reshape(W, H)
    ranked = sorted(range(W), key=lambda w: (load[w].max(), w))
    return [ranked[int((i + 0.5) * W / n_weeks)] for i in range(n_weeks)]


def sample_weeks(system: SystemData, n_weeks: int) -> WeekSample:
    """Pick ``n_weeks`` medoid weeks; weights count the weeks each one stands for."""
    W = system.n_weeks
    if not 1 <= n_weeks <= W:
        raise InvalidParameterError(f"n_weeks must be in 1..{W}, got {n_weeks}")
    if n_weeks == W:
        return WeekSample.full_year(W)
    x = week_features(system)
    dist = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))
    medoids = kmedoids(dist, initial_medoids(system, n_weeks))
    counts = assign_weeks(dist, medoids)
    return WeekSample(tuple(m + 1 for m in medoids), tuple(float(counts[m]) for m in medoids))
