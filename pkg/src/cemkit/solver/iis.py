"""Locate a small infeasible row subset by greedy deletion."""

from __future__ import annotations

import numpy as np

from cemkit.formulation.problem import PeriodProblem, tag_string


def infeasible_rows(problem: PeriodProblem, solve_fn, max_solves: int = 400) -> list[str]:
    """Tags of rows that remain infeasible together after greedy elimination.

    Whole row kinds are dropped first, then halves of what remains, then single
    rows. Each trial keeps a deletion only if the reduced problem stays
    infeasible, so the survivors form an infeasible subset (irreducible when
    the single-row pass completes within ``max_solves``).
    """
    budget = [max_solves]

    def infeasible(rows):
        budget[0] -= 1
        return solve_fn(problem.subproblem_rows(np.asarray(sorted(rows), dtype=np.int64))).status == "infeasible"

    keep = set(range(problem.n_rows))
    if not infeasible(keep):
        return []
    kinds = {}
    for i, t in enumerate(problem.row_tags):
        kinds.setdefault(t[0], set()).add(i)
    for kind in sorted(kinds):
        trial = keep - kinds[kind]
        if budget[0] > 0 and infeasible(trial):
            keep = trial
    chunk = max(len(keep) // 2, 1)
    while chunk >= 1 and budget[0] > 0:
        rows = sorted(keep)
        for start in range(0, len(rows), chunk):
            part = set(rows[start:start + chunk])
            if budget[0] <= 0:
                break
            if part <= keep and infeasible(keep - part):
                keep -= part
        if chunk == 1:
            break
        chunk //= 2
    return [tag_string(problem.row_tags[i]) for i in sorted(keep)]
