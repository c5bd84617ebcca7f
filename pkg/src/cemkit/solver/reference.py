"""Bounded revised simplex for desk-scale LPs.

Works on ``min c'x  s.t.  A x - r = 0,  lb <= x <= ub,  lo <= r <= hi`` where
``r`` are logical row variables. The starting basis is all logicals. Phase 1
minimizes the sum of bound violations (conservative ratio test, so the
infeasibility never grows within a step); phase 2 optimizes the true costs.
Pricing is Dantzig with a switch to Bland's rule after a run of degenerate
pivots. The basis is held as a sparse LU plus a product-form eta file,
refactored every ``refactor_every`` updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from cemkit.errors import SolverError

DEFAULT_MAX_NNZ = 50_000


@dataclass
class SimplexResult:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: np.ndarray
    row_activity: np.ndarray
    duals: np.ndarray  # d obj / d row bound
    reduced_costs: np.ndarray
    objective: float
    iterations: int
    trace: list = field(default_factory=list)


def _minmax(X: sp.csr_matrix):
    """Per-row max and min of the stored entries (0 and inf for empty rows)."""
    m = X.shape[0]
    has = np.diff(X.indptr) > 0
    mx, mn = np.zeros(m), np.full(m, np.inf)
    if has.any():
        starts = X.indptr[:-1][has]
        mx[has] = np.maximum.reduceat(X.data, starts)
        mn[has] = np.minimum.reduceat(X.data, starts)
    return mx, mn


def _equilibrate(A: sp.csr_matrix, passes: int = 4):
    """Geometric-mean row/column scaling; returns (R, C) with R A C better balanced."""
    B = abs(A).tocsr().astype(float)
    B.eliminate_zeros()
    m, n = B.shape
    R, C = np.ones(m), np.ones(n)
    for _ in range(passes):
        mx, mn = _minmax((sp.diags(R) @ B @ sp.diags(C)).tocsr())
        ok = np.isfinite(mn) & (mx > 0)
        R[ok] /= np.sqrt(mx[ok] * mn[ok])
        mx, mn = _minmax((sp.diags(R) @ B @ sp.diags(C)).T.tocsr())
        ok = np.isfinite(mn) & (mx > 0)
        C[ok] /= np.sqrt(mx[ok] * mn[ok])
    return R, C


class _Basis:
    """LU of the basis matrix with product-form updates."""

    def __init__(self, M: sp.csc_matrix, basic: np.ndarray):
        self.M = M
        self.factor(basic)

    def factor(self, basic):
        B = self.M[:, basic].tocsc()
        try:
            self.lu = spla.splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError as exc:
            raise SolverError(f"basis factorization failed: {exc}") from None
        self.etas = []  # (pivot row, column w)

    def ftran(self, a: np.ndarray) -> np.ndarray:
        w = self.lu.solve(a)
        for p, eta in self.etas:
            wp = w[p] / eta[p]
            w -= wp * eta
            w[p] = wp
        return w

    def btran(self, c: np.ndarray) -> np.ndarray:
        y = c.copy()
        for p, eta in reversed(self.etas):
            # y' E^{-1}: only the p-th entry changes
            y[p] = (y[p] - (y @ eta - y[p] * eta[p])) / eta[p]
        return self.lu.solve(y, trans="T")

    def update(self, p: int, w: np.ndarray):
        self.etas.append((p, w.copy()))


def simplex(
    c: np.ndarray,
    A: sp.spmatrix,
    row_lo: np.ndarray,
    row_hi: np.ndarray,
    lb: np.ndarray,
    ub: np.ndarray,
    *,
    max_iterations: int = 200_000,
    feas_tol: float = 1e-9,
    opt_tol: float = 1e-9,
    refactor_every: int = 64,
    bland_after: int = 50,
    scale: bool = True,
) -> SimplexResult:
    A = sp.csr_matrix(A, dtype=float)
    m, n = A.shape
    c = np.asarray(c, dtype=float)
    row_lo, row_hi = np.asarray(row_lo, float), np.asarray(row_hi, float)
    lb, ub = np.asarray(lb, float), np.asarray(ub, float)

    if np.any(lb > ub) or np.any(row_lo > row_hi):
        return _infeasible(n, m)

    # scaling: x = C xs, rows scaled by R, objective by sigma
    if scale and A.nnz:
        R, C = _equilibrate(A)
    else:
        R, C = np.ones(m), np.ones(n)
    sigma = max(float(np.max(np.abs(c * C))) if n else 1.0, 1e-300)
    if sigma == 0:
        sigma = 1.0
    As = (sp.diags(R) @ A @ sp.diags(C)).tocsc()
    cs = c * C / sigma
    lo = np.concatenate([lb / C, row_lo * R])
    hi = np.concatenate([ub / C, row_hi * R])
    N = n + m
    M = sp.hstack([As, -sp.identity(m, format="csc")], format="csc")
    cost = np.concatenate([cs, np.zeros(m)])

    # nonbasic start: structurals at a finite bound (free at zero)
    z = np.where(np.isfinite(lo[:n]), lo[:n], np.where(np.isfinite(hi[:n]), hi[:n], 0.0))
    zfull = np.zeros(N)
    zfull[:n] = z
    basic = np.arange(n, N)
    is_basic = np.zeros(N, dtype=bool)
    is_basic[basic] = True
    zfull[n:] = As @ z
    basis = _Basis(M, basic)
    MT = M.T.tocsr()

    trace = []
    it = 0
    degenerate_run = 0
    since_factor = 0
    while True:
        xb = zfull[basic]
        lo_b, hi_b = lo[basic], hi[basic]
        below = xb < lo_b - feas_tol
        above = xb > hi_b + feas_tol
        infeasible = below | above
        phase = 1 if infeasible.any() else 2
        if phase == 1:
            cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
        else:
            cb = cost[basic]
        y = basis.btran(cb)
        if phase == 1:
            d = -(MT @ y)
        else:
            d = cost - MT @ y
        d[is_basic] = 0.0
        at_lo = np.isclose(zfull, lo, rtol=0, atol=feas_tol) & np.isfinite(lo)
        at_hi = np.isclose(zfull, hi, rtol=0, atol=feas_tol) & np.isfinite(hi)
        fixed = at_lo & at_hi
        can_up = ~is_basic & ~fixed & ~at_hi
        can_dn = ~is_basic & ~fixed & ~at_lo
        score = np.where(can_up & (d < -opt_tol), -d, 0.0) + np.where(can_dn & (d > opt_tol), d, 0.0)
        if not score.any():
            if phase == 1:
                status = "infeasible"
            else:
                status = "optimal"
            break
        if it >= max_iterations:
            status = "iteration_limit"
            break
        use_bland = degenerate_run >= bland_after
        q = int(np.flatnonzero(score)[0]) if use_bland else int(np.argmax(score))
        direction = 1.0 if (can_up[q] and d[q] < -opt_tol) else -1.0

        col = M[:, q].toarray().ravel()
        w = basis.ftran(col)
        delta = -direction * w  # change of x_B per unit step
        # bounds seen by the ratio test: infeasible basics may only travel back to their violated bound
        lo_eff = np.where(below, -np.inf, lo_b)
        hi_eff = np.where(above, np.inf, hi_b)
        if phase == 1:
            lo_eff = np.where(above, hi_b, lo_eff)
            hi_eff = np.where(below, lo_b, hi_eff)
        step, leave = _ratio_test(xb, delta, lo_eff, hi_eff, feas_tol, use_bland, basic)
        flip = hi[q] - lo[q]
        if leave is None and not math.isfinite(flip):
            if phase == 1:
                raise SolverError("phase 1 unbounded direction (numerical trouble)", trace=trace)
            status = "unbounded"
            break
        if leave is None or flip <= step:
            step = flip
            leave = None
        degenerate_run = degenerate_run + 1 if step <= feas_tol else 0
        zfull[basic] = xb + step * delta
        zfull[q] += direction * step
        if leave is not None:
            out = basic[leave]
            # snap the leaving variable to the bound it reached
            target = hi_eff[leave] if delta[leave] > 0 else lo_eff[leave]
            zfull[out] = target
            basic[leave] = q
            is_basic[out] = False
            is_basic[q] = True
            basis.update(leave, w)
            since_factor += 1
            if since_factor >= refactor_every:
                basis.factor(basic)
                since_factor = 0
                _recompute_basics(M, basis, basic, zfull, is_basic)
        it += 1
        if it % 500 == 0:
            trace.append((it, phase, int(infeasible.sum()), float(cost @ zfull) * sigma))

    if status in ("optimal",):
        basis.factor(basic)
        _recompute_basics(M, basis, basic, zfull, is_basic)
        y = basis.btran(cost[basic])
        d = cost - MT @ y
        d[is_basic] = 0.0
    else:
        y = np.zeros(m)
        d = np.zeros(N)
    xs = zfull[:n]
    x = xs * C
    duals = y * R * sigma
    rc = d[:n] / C * sigma
    activity = A @ x
    return SimplexResult(status, x, activity, duals, rc, float(c @ x), it, trace)


def _recompute_basics(M, basis, basic, zfull, is_basic):
    nb = ~is_basic
    zfull[basic] = basis.ftran(-(M[:, nb] @ zfull[nb]))


def _ratio_test(xb, delta, lo, hi, tol, bland, basic):
    """Harris two-pass ratio test. Returns (step, leaving position or None)."""
    piv_tol = 1e-9
    up = delta > piv_tol
    dn = delta < -piv_tol
    with np.errstate(divide="ignore", invalid="ignore"):
        r_relaxed = np.full(len(xb), np.inf)
        r_relaxed[up] = (hi[up] + tol - xb[up]) / delta[up]
        r_relaxed[dn] = (lo[dn] - tol - xb[dn]) / delta[dn]
    theta = r_relaxed.min() if len(xb) else np.inf
    if not math.isfinite(theta):
        return np.inf, None
    with np.errstate(divide="ignore", invalid="ignore"):
        r_exact = np.full(len(xb), np.inf)
        r_exact[up] = (hi[up] - xb[up]) / delta[up]
        r_exact[dn] = (lo[dn] - xb[dn]) / delta[dn]
    cand = np.flatnonzero(r_exact <= theta)
    if cand.size == 0:
        cand = np.array([int(np.argmin(r_relaxed))])
    if bland:
        best_ratio = r_exact[cand].min()
        tied = cand[r_exact[cand] <= best_ratio + tol]
        leave = int(tied[np.argmin(basic[tied])])
    else:
        leave = int(cand[np.argmax(np.abs(delta[cand]))])
    return max(float(r_exact[leave]), 0.0), leave


def _infeasible(n, m):
    return SimplexResult("infeasible", np.zeros(n), np.zeros(m), np.zeros(m), np.zeros(n), math.nan, 0)
