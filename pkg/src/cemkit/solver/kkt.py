"""Optimality certificate check for an LP solution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cemkit.formulation.problem import PeriodProblem


@dataclass(frozen=True)
class KKTReport:
    primal_residual: float  # max row/bound violation / (1 + |rhs|)
    dual_residual: float  # max wrong-signed multiplier / (1 + max|c|)
    complementarity: float  # max |multiplier x slack| / (1 + |obj|)
    duality_gap: float  # |primal - dual| / (1 + |obj|)

    @property
    def max_residual(self) -> float:
        return max(self.primal_residual, self.dual_residual, self.complementarity, self.duality_gap)

    def ok(self, tol: float = 1e-6) -> bool:
        return self.max_residual <= tol


def verify_kkt(problem: PeriodProblem, solution) -> KKTReport:
    """Scaled primal and dual feasibility, then complementary slackness and the duality gap.

    Row duals are read as d objective / d rhs, so <= rows carry y <= 0 and
    >= rows y >= 0. Column multipliers are recovered as z = c - A'y and split
    between the lower and upper bound.
    """
    c, A, _, _, lb, ub = problem._assemble()
    lo, hi = problem.row_bounds()
    x, y = np.asarray(solution.x, float), np.asarray(solution.duals, float)
    ax = A @ x
    cscale = 1.0 + (float(np.max(np.abs(c))) if c.size else 0.0)

    def viol(v, ref):
        return v / (1.0 + np.abs(np.where(np.isfinite(ref), ref, 0.0)))

    p = [0.0]
    if len(ax):
        p.append(float(np.max(viol(np.maximum(lo - ax, 0.0), lo))))
        p.append(float(np.max(viol(np.maximum(ax - hi, 0.0), hi))))
    if len(x):
        p.append(float(np.max(viol(np.maximum(lb - x, 0.0), lb))))
        p.append(float(np.max(viol(np.maximum(x - ub, 0.0), ub))))

    # row multipliers: positive part pairs with lo, negative with hi
    y_lo, y_hi = np.maximum(y, 0.0), np.minimum(y, 0.0)
    bad_row = np.where(np.isinf(lo), y_lo, 0.0) + np.where(np.isinf(hi), -y_hi, 0.0)
    z = c - A.T @ y
    z_lo, z_hi = np.maximum(z, 0.0), np.minimum(z, 0.0)
    bad_col = np.where(np.isinf(lb), z_lo, 0.0) + np.where(np.isinf(ub), -z_hi, 0.0)
    d = max(float(np.max(np.abs(bad_row))) if len(y) else 0.0, float(np.max(np.abs(bad_col))) if len(z) else 0.0)

    obj = float(c @ x)
    oscale = 1.0 + abs(obj)
    fin = lambda v: np.where(np.isfinite(v), v, 0.0)
    comp = [0.0]
    if len(y):
        comp.append(float(np.max(np.abs(y_lo * (ax - fin(lo))))))
        comp.append(float(np.max(np.abs(y_hi * (fin(hi) - ax)))))
    if len(z):
        comp.append(float(np.max(np.abs(z_lo * (x - fin(lb))))))
        comp.append(float(np.max(np.abs(z_hi * (fin(ub) - x)))))
    dual_obj = float(y_lo @ fin(lo) + y_hi @ fin(hi) + z_lo @ fin(lb) + z_hi @ fin(ub))
    return KKTReport(
        primal_residual=max(p),
        dual_residual=d / cscale,
        complementarity=max(comp) / oscale,
        duality_gap=abs(obj - dual_obj) / oscale,
    )
