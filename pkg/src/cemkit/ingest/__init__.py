from cemkit.ingest.clustering import RawUnitRecord, cluster_units
from cemkit.ingest.io import load_system, validate_directory, write_system
from cemkit.ingest.scenario import (
    CONFIGURATIONS,
    NET_ZERO_TARGETS_MT,
    apply_scenario_overrides,
    current_policies,
    load_configuration,
    load_scenario,
    net_zero,
    net_zero_cap_schedule,
    scenario_hash,
)
from cemkit.ingest.weeks import WeekSample, sample_weeks

__all__ = [
    "CONFIGURATIONS",
    "NET_ZERO_TARGETS_MT",
    "RawUnitRecord",
    "WeekSample",
    "apply_scenario_overrides",
    "cluster_units",
    "current_policies",
    "load_configuration",
    "load_scenario",
    "load_system",
    "net_zero",
    "net_zero_cap_schedule",
    "sample_weeks",
    "scenario_hash",
    "validate_directory",
    "write_system",
]
