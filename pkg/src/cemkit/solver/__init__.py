"""LP solving: pluggable backends, a reference simplex and KKT verification."""

from cemkit.solver.core import (
    BACKEND_ENV,
    BACKENDS,
    Solution,
    SolveSettings,
    add_solve_observer,
    reference_solve,
    remove_solve_observer,
    solve,
)
from cemkit.solver.iis import infeasible_rows
from cemkit.solver.kkt import KKTReport, verify_kkt

__all__ = [
    "BACKENDS",
    "BACKEND_ENV",
    "KKTReport",
    "Solution",
    "SolveSettings",
    "add_solve_observer",
    "infeasible_rows",
    "reference_solve",
    "remove_solve_observer",
    "solve",
    "verify_kkt",
]
