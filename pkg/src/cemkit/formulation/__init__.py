"""LP assembly for expansion planning and dispatch."""

from cemkit.formulation.blocks import (
    CapRef,
    FixedCapacity,
    PeriodContext,
    TimeBlock,
    annuity_per_mw,
    time_blocks,
    transmission_expansion_bound,
)
from cemkit.formulation.build import (
    PeriodReadout,
    build_foresight_problem,
    build_period_problem,
    planning_blocks,
    read_period,
    sunk_charges,
)
from cemkit.formulation.problem import PeriodProblem
from cemkit.formulation.state import BuildRecord, CarriedState, Vintage

__all__ = [
    "BuildRecord",
    "CapRef",
    "CarriedState",
    "FixedCapacity",
    "PeriodContext",
    "PeriodProblem",
    "PeriodReadout",
    "TimeBlock",
    "Vintage",
    "annuity_per_mw",
    "build_foresight_problem",
    "build_period_problem",
    "planning_blocks",
    "read_period",
    "sunk_charges",
    "time_blocks",
    "transmission_expansion_bound",
]
