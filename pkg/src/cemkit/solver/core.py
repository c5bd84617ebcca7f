"""Backend-agnostic solve entry point."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from cemkit.errors import ConfigurationError, SolverError
from cemkit.formulation.problem import PeriodProblem
from cemkit.solver import reference
from cemkit.solver.kkt import verify_kkt

METHODS = ("interior_point_no_crossover", "simplex")
BACKENDS = ("highs", "scipy", "reference")
BACKEND_ENV = "CEMKIT_BACKEND"


@dataclass(frozen=True)
class SolveSettings:
    backend: str | None = None  # None -> $CEMKIT_BACKEND or "highs"
    method: str = "interior_point_no_crossover"
    feasibility_tol: float = 1e-7
    optimality_tol: float = 1e-7
    max_iterations: int = 200_000
    reference_max_nnz: int = reference.DEFAULT_MAX_NNZ
    kkt_tol: float = 1e-6  # barrier answers looser than this are polished by crossover

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.feasibility_tol <= 0 or self.optimality_tol <= 0:
            raise ConfigurationError("tolerances must be > 0")
        if self.backend is not None and self.backend not in BACKENDS:
            raise ConfigurationError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")

    @property
    def resolved_backend(self) -> str:
        name = self.backend or os.environ.get(BACKEND_ENV) or "highs"
        if name not in BACKENDS:
            raise ConfigurationError(f"unknown backend {name!r} (from ${BACKEND_ENV}); choose from {BACKENDS}")
        return name


@dataclass
class Solution:
    status: str  # optimal | infeasible | unbounded | iteration_limit
    x: np.ndarray
    duals: np.ndarray  # d objective / d row rhs
    objective: float  # including the problem's constant offset
    backend: str = ""
    iterations: int = 0
    reduced_costs: np.ndarray | None = None
    trace: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _objective_scale(c: np.ndarray) -> float:
    m = float(np.max(np.abs(c))) if c.size else 0.0
    return m if m > 0 else 1.0


def _solve_highs(problem: PeriodProblem, settings: SolveSettings) -> Solution:
    import highspy

    c, A, _, _, lb, ub = problem._assemble()
    lo, hi = problem.row_bounds()
    sigma = _objective_scale(c)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("threads", 1)
    if settings.method == "interior_point_no_crossover":
        h.setOptionValue("solver", "ipm")
        h.setOptionValue("run_crossover", "off")
        h.setOptionValue("ipm_optimality_tolerance", min(settings.optimality_tol, 1e-8))
    else:
        h.setOptionValue("solver", "simplex")
    h.setOptionValue("primal_feasibility_tolerance", settings.feasibility_tol)
    h.setOptionValue("dual_feasibility_tolerance", settings.optimality_tol)
    h.setOptionValue("ipm_iteration_limit", settings.max_iterations)
    h.setOptionValue("simplex_iteration_limit", settings.max_iterations)
    inf = highspy.kHighsInf
    lp = highspy.HighsLp()
    lp.num_col_, lp.num_row_ = problem.n_vars, problem.n_rows
    lp.col_cost_ = c / sigma
    lp.col_lower_ = np.where(np.isinf(lb), -inf, lb)
    lp.col_upper_ = np.where(np.isinf(ub), inf, ub)
    lp.row_lower_ = np.where(np.isinf(lo), -inf, lo)
    lp.row_upper_ = np.where(np.isinf(hi), inf, hi)
    Acsc = A.tocsc()
    lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    lp.a_matrix_.start_ = Acsc.indptr.astype(np.int32)
    lp.a_matrix_.index_ = Acsc.indices.astype(np.int32)
    lp.a_matrix_.value_ = Acsc.data
    h.passModel(lp)
    h.run()
    ms = h.getModelStatus()
    text = h.modelStatusToString(ms).lower()
    trace = [f"highs {settings.method}: {text}"]
    if ms == highspy.HighsModelStatus.kUnknown and settings.method == "interior_point_no_crossover":
        # the barrier stalled short of its tolerances; crossover recovers a vertex from where it stopped
        h.setOptionValue("run_crossover", "on")
        h.run()
        ms = h.getModelStatus()
        text = h.modelStatusToString(ms).lower()
        trace.append(f"highs crossover retry: {text}")
    sol = _highs_solution(h, problem, sigma, text, trace)
    if (sol.optimal and settings.method == "interior_point_no_crossover"
            and verify_kkt(problem, sol).max_residual > settings.kkt_tol):
        # interior optima on degenerate faces can carry a loose gap; a vertex closes it
        h.setOptionValue("run_crossover", "on")
        h.run()
        text = h.modelStatusToString(h.getModelStatus()).lower()
        trace.append(f"highs crossover polish: {text}")
        sol = _highs_solution(h, problem, sigma, text, trace)
    return sol


def _highs_solution(h, problem: PeriodProblem, sigma: float, text: str, trace: list) -> Solution:
    import highspy

    ms = h.getModelStatus()
    if ms == highspy.HighsModelStatus.kOptimal:
        status = "optimal"
    elif "infeasible" in text and "unbounded" not in text:
        status = "infeasible"
    elif "unbounded" in text:
        status = "unbounded"
    elif "iteration limit" in text:
        status = "iteration_limit"
    else:
        raise SolverError(f"HiGHS returned status {text!r}", trace=trace)
    sol = h.getSolution()
    info = h.getInfo()
    x = np.asarray(sol.col_value, dtype=float) if status == "optimal" else np.zeros(problem.n_vars)
    y = np.asarray(sol.row_dual, dtype=float) * sigma if status == "optimal" else np.zeros(problem.n_rows)
    rc = np.asarray(sol.col_dual, dtype=float) * sigma if status == "optimal" else None
    iters = int(info.ipm_iteration_count + info.simplex_iteration_count)
    obj = problem.objective_value(x) if status == "optimal" else math.nan
    return Solution(status, x, y, obj, "highs", iters, rc, list(trace))


def _solve_scipy(problem: PeriodProblem, settings: SolveSettings) -> Solution:
    from scipy.optimize import linprog

    c, A, sense, rhs, lb, ub = problem._assemble()
    sigma = _objective_scale(c)
    le = sense == "<="
    ge = sense == ">="
    eq = sense == "="
    A_ub = A[le | ge].multiply(np.where(ge[le | ge], -1.0, 1.0)[:, None]).tocsr()
    b_ub = np.where(ge[le | ge], -rhs[le | ge], rhs[le | ge])
    method = "highs-ipm" if settings.method == "interior_point_no_crossover" else "highs-ds"
    res = linprog(
        c / sigma,
        A_ub=A_ub if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=A[eq] if eq.any() else None,
        b_eq=rhs[eq] if eq.any() else None,
        bounds=np.column_stack([np.where(np.isinf(lb), None, lb), np.where(np.isinf(ub), None, ub)]),
        method=method,
        options={"maxiter": settings.max_iterations},
    )
    status = {0: "optimal", 1: "iteration_limit", 2: "infeasible", 3: "unbounded"}.get(res.status)
    if status is None:
        raise SolverError(f"linprog failed: {res.message}", trace=[res.message])
    y = np.zeros(problem.n_rows)
    if status == "optimal":
        if le.any() or ge.any():
            m_ub = np.asarray(res.ineqlin.marginals) * sigma
            y[le | ge] = np.where(ge[le | ge], -m_ub, m_ub)
        if eq.any():
            y[eq] = np.asarray(res.eqlin.marginals) * sigma
        x = np.asarray(res.x, dtype=float)
    else:
        x = np.zeros(problem.n_vars)
    obj = problem.objective_value(x) if status == "optimal" else math.nan
    return Solution(status, x, y, obj, "scipy", int(res.nit))


def reference_solve(problem: PeriodProblem, settings: SolveSettings | None = None) -> Solution:
    """Self-contained revised simplex; refuses problems above the nonzero cap."""
    settings = settings or SolveSettings(backend="reference")
    if problem.nnz > settings.reference_max_nnz:
        raise SolverError(
            f"problem has {problem.nnz} nonzeros, above the reference solver cap of "
            f"{settings.reference_max_nnz}; use the 'highs' backend",
            trace=[],
        )
    c, A, _, _, lb, ub = problem._assemble()
    lo, hi = problem.row_bounds()
    res = reference.simplex(c, A, lo, hi, lb, ub, max_iterations=settings.max_iterations)
    obj = problem.objective_value(res.x) if res.status == "optimal" else math.nan
    return Solution(res.status, res.x, res.duals, obj, "reference", res.iterations, res.reduced_costs, res.trace)


_OBSERVERS: list = []


def add_solve_observer(fn) -> None:
    """Call ``fn(problem, solution)`` after every :func:`solve` in this process."""
    _OBSERVERS.append(fn)


def remove_solve_observer(fn) -> None:
    if fn in _OBSERVERS:
        _OBSERVERS.remove(fn)


def solve(problem: PeriodProblem, settings: SolveSettings | None = None) -> Solution:
    """Solve with the configured backend. Reference solves always use simplex."""
    settings = settings or SolveSettings()
    backend = settings.resolved_backend
    if problem.n_vars == 0:
        sol = Solution("optimal", np.zeros(0), np.zeros(problem.n_rows), problem.offset, backend)
    elif backend == "reference":
        sol = reference_solve(problem, settings)
    elif backend == "scipy":
        sol = _solve_scipy(problem, settings)
    else:
        sol = _solve_highs(problem, settings)
    for fn in list(_OBSERVERS):
        fn(problem, sol)
    return sol
