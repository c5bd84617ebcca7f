"""Core data model: zones, resources, corridors, fuels, policies, scenarios.

Everything here is a frozen dataclass. Hourly series are stored as read-only
numpy arrays so a ``SystemData`` can be shared between workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping

import numpy as np

from cemkit.errors import ConfigurationError, InvalidParameterError

INF = math.inf
WEEKS_PER_YEAR = 52
HOURS_PER_WEEK = 168
HOURS_PER_YEAR = 8760


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _fields_equal(a, b) -> bool:
    if type(a) is not type(b):
        return NotImplemented
    for f in fields(a):
        if not f.compare:
            continue
        x, y = getattr(a, f.name), getattr(b, f.name)
        if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
            if x is None or y is None or not np.array_equal(x, y):
                return False
        elif x != y:
            return False
    return True


@dataclass(frozen=True, eq=False)
class Zone:
    id: str
    demand: np.ndarray
    region_tags: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "demand", _frozen_array(self.demand))
        object.__setattr__(self, "region_tags", frozenset(self.region_tags))

    __eq__ = _fields_equal


@dataclass(frozen=True)
class TechClass:
    name: str
    fuel: str | None = None
    heat_rate: float = 0.0  # MMBTU/MWh
    emission_rate: float | None = None  # tCO2/MMBTU; None -> fuel's factor
    is_ccs: bool = False
    capture_rate: float = 0.0
    is_firm: bool = False
    is_variable: bool = False
    is_storage: bool = False
    is_hydro: bool = False
    unit_size: float = 100.0
    min_load_fraction: float | None = None
    ramp_fraction_per_hour: float | None = None
    min_up_hours: int | None = None
    min_down_hours: int | None = None
    startup_cost_per_mw: float | None = None

    def __post_init__(self):
        if self.heat_rate < 0:
            raise InvalidParameterError(f"tech {self.name}: heat_rate must be >= 0")
        if self.emission_rate is not None and self.emission_rate < 0:
            raise InvalidParameterError(f"tech {self.name}: emission_rate must be >= 0")
        if not 0.0 <= self.capture_rate <= 1.0:
            raise InvalidParameterError(f"tech {self.name}: capture_rate outside [0, 1]")
        if self.capture_rate > 0 and not self.is_ccs:
            raise InvalidParameterError(f"tech {self.name}: capture_rate > 0 requires is_ccs")
        if self.unit_size <= 0:
            raise InvalidParameterError(f"tech {self.name}: unit_size must be > 0")
        if self.min_load_fraction is not None and not 0.0 <= self.min_load_fraction <= 1.0:
            raise InvalidParameterError(f"tech {self.name}: min_load_fraction outside [0, 1]")
        if self.ramp_fraction_per_hour is not None and not 0.0 < self.ramp_fraction_per_hour <= 1.0:
            raise InvalidParameterError(f"tech {self.name}: ramp_fraction_per_hour outside (0, 1]")

    @property
    def commits(self) -> bool:
        """True for thermal techs that take part in unit commitment."""
        return self.is_firm and not (self.is_hydro or self.is_storage or self.is_variable)

    @property
    def has_uc_params(self) -> bool:
        return None not in (
            self.min_load_fraction,
            self.ramp_fraction_per_hour,
            self.min_up_hours,
            self.min_down_hours,
            self.startup_cost_per_mw,
        )


@dataclass(frozen=True)
class StorageParams:
    power_capex: float = 0.0  # $/kW
    energy_capex: float = 0.0  # $/kWh
    duration_fixed_hours: float | None = None
    round_trip_efficiency: float = 1.0
    existing_power: float = 0.0
    existing_energy: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.round_trip_efficiency <= 1.0:
            raise InvalidParameterError("round_trip_efficiency outside (0, 1]")
        if self.duration_fixed_hours is not None and self.duration_fixed_hours <= 0:
            raise InvalidParameterError("duration_fixed_hours must be > 0")
        if min(self.power_capex, self.energy_capex, self.existing_power, self.existing_energy) < 0:
            raise InvalidParameterError("storage costs and capacities must be >= 0")

    @property
    def one_way_efficiency(self) -> float:
        return math.sqrt(self.round_trip_efficiency)


@dataclass(frozen=True, eq=False)
class ResourceCluster:
    id: str
    zone: str
    tech: TechClass
    existing_capacity: float = 0.0  # MW
    build_year: int = 2000
    lifetime_years: int = 30
    new_build_allowed: bool = False
    max_new_capacity: float = INF
    capex_overnight: float = 0.0  # $/kW
    interconnect_capex: float = 0.0  # $/kW
    fixed_om: float = 0.0  # $/kW-yr
    variable_om: float = 0.0  # $/MWh
    profile: np.ndarray | None = None
    wacc_override: float | None = None
    storage: StorageParams | None = None
    # (build_year, MW) pairs for existing capacity; empty means one vintage
    existing_vintages: tuple = ()
    heat_rate: float | None = None  # cluster-specific override of tech heat rate
    ptc_bonus: float = 0.0

    def __post_init__(self):
        if self.profile is not None:
            prof = _frozen_array(self.profile)
            if prof.size and (prof.min() < 0 or prof.max() > 1):
                raise InvalidParameterError(f"cluster {self.id}: profile outside [0, 1]")
            object.__setattr__(self, "profile", prof)
        if self.tech.is_variable and self.profile is None:
            raise InvalidParameterError(f"cluster {self.id}: variable resource needs a profile")
        if self.tech.is_storage and self.storage is None:
            raise InvalidParameterError(f"cluster {self.id}: storage tech needs StorageParams")
        if self.existing_capacity < 0 or not math.isfinite(self.existing_capacity):
            raise InvalidParameterError(f"cluster {self.id}: existing_capacity must be finite and >= 0")
        if self.max_new_capacity < 0:
            raise InvalidParameterError(f"cluster {self.id}: max_new_capacity must be >= 0")
        if self.lifetime_years < 1:
            raise InvalidParameterError(f"cluster {self.id}: lifetime_years must be >= 1")
        if not self.existing_vintages and self.existing_capacity > 0:
            object.__setattr__(
                self, "existing_vintages", ((int(self.build_year), float(self.existing_capacity)),)
            )
        else:
            object.__setattr__(
                self,
                "existing_vintages",
                tuple((int(y), float(mw)) for y, mw in self.existing_vintages),
            )

    __eq__ = _fields_equal

    @property
    def effective_heat_rate(self) -> float:
        return self.tech.heat_rate if self.heat_rate is None else self.heat_rate

    @property
    def is_storage(self) -> bool:
        return self.tech.is_storage


@dataclass(frozen=True)
class TransmissionCorridor:
    id: str
    zone_from: str
    zone_to: str
    existing_capacity: float = 0.0
    loss_fraction: float = 0.0
    reinforcement_cost: float = 0.0  # $/MW-yr, already annuitized
    intra_regional_adder: bool = False

    def __post_init__(self):
        if self.zone_from == self.zone_to:
            raise InvalidParameterError(f"corridor {self.id}: zone_from == zone_to")
        if not 0.0 <= self.loss_fraction <= 0.2:
            raise InvalidParameterError(f"corridor {self.id}: loss_fraction outside [0, 0.2]")
        if self.existing_capacity < 0 or self.reinforcement_cost < 0:
            raise InvalidParameterError(f"corridor {self.id}: negative capacity or cost")

    @property
    def effective_loss(self) -> float:
        # 1 MW of intra-regional line per MW inter-regional: losses count twice
        return self.loss_fraction * (2.0 if self.intra_regional_adder else 1.0)

    @property
    def effective_cost(self) -> float:
        return self.reinforcement_cost * (2.0 if self.intra_regional_adder else 1.0)


@dataclass(frozen=True)
class FuelSpec:
    id: str
    price_by_period: Mapping[str, float]
    emission_factor: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "price_by_period", dict(self.price_by_period))
        if any(p < 0 for p in self.price_by_period.values()):
            raise InvalidParameterError(f"fuel {self.id}: negative price")
        if self.emission_factor < 0:
            raise InvalidParameterError(f"fuel {self.id}: negative emission factor")


@dataclass(frozen=True)
class Period:
    label: str
    start_year: int
    end_year: int
    demand_scale: float = 1.0

    @property
    def representative_year(self) -> int:
        # investment is sized to meet demand in the final year of the period
        return self.end_year

    @property
    def years(self) -> int:
        return self.end_year - self.start_year + 1


DEFAULT_PERIODS = (
    Period("2027", 2024, 2027),
    Period("2030", 2028, 2030),
    Period("2035", 2031, 2035),
    Period("2040", 2036, 2040),
    Period("2045", 2041, 2045),
    Period("2050", 2046, 2050),
)


@dataclass(frozen=True)
class PlanningHorizon:
    periods: tuple = DEFAULT_PERIODS
    discount_rate: float = 0.02

    def __post_init__(self):
        periods = tuple(self.periods)
        object.__setattr__(self, "periods", periods)
        if not periods:
            raise InvalidParameterError("horizon needs at least one period")
        for p in periods:
            if p.end_year < p.start_year:
                raise InvalidParameterError(f"period {p.label}: end before start")
        for a, b in zip(periods, periods[1:]):
            if b.start_year != a.end_year + 1:
                raise InvalidParameterError(f"periods {a.label} and {b.label} are not contiguous")
        if len({p.label for p in periods}) != len(periods):
            raise InvalidParameterError("duplicate period labels")
        if self.discount_rate < 0:
            raise InvalidParameterError("discount_rate must be >= 0")

    @property
    def base_year(self) -> int:
        return self.periods[0].start_year

    @property
    def labels(self) -> list[str]:
        return [p.label for p in self.periods]

    def period(self, label: str) -> Period:
        for p in self.periods:
            if p.label == label:
                return p
        raise KeyError(label)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def truncated(self, n: int) -> "PlanningHorizon":
        return replace(self, periods=self.periods[:n])


@dataclass(frozen=True)
class CarbonCap:
    schedule: Mapping[str, float]  # period label -> tCO2/yr
    buyout_price: float = 200.0
    regions: frozenset | None = None  # None -> national
    name: str = "national"

    def __post_init__(self):
        object.__setattr__(self, "schedule", dict(self.schedule))
        if self.regions is not None:
            object.__setattr__(self, "regions", frozenset(self.regions))
        if self.buyout_price < 0:
            raise InvalidParameterError("buyout_price must be >= 0")
        if any(v < 0 for v in self.schedule.values()):
            raise InvalidParameterError("cap values must be >= 0")


@dataclass(frozen=True)
class CleanStandard:
    regions: frozenset
    fractions: Mapping[str, float]
    qualifying_techs: frozenset | None = None  # None -> zero-emission techs
    name: str = "ces"

    def __post_init__(self):
        object.__setattr__(self, "regions", frozenset(self.regions))
        object.__setattr__(self, "fractions", dict(self.fractions))
        if self.qualifying_techs is not None:
            object.__setattr__(self, "qualifying_techs", frozenset(self.qualifying_techs))
        if any(not 0.0 <= f <= 1.0 for f in self.fractions.values()):
            raise InvalidParameterError("clean fraction outside [0, 1]")


@dataclass(frozen=True)
class CapacityTarget:
    regions: frozenset
    techs: frozenset
    targets: Mapping[str, float]  # period label -> MW
    name: str = "target"

    def __post_init__(self):
        object.__setattr__(self, "regions", frozenset(self.regions))
        object.__setattr__(self, "techs", frozenset(self.techs))
        object.__setattr__(self, "targets", dict(self.targets))


TAX_CREDIT_KINDS = ("itc", "ptc", "sequestration")


@dataclass(frozen=True)
class TaxCredit:
    techs: frozenset
    kind: str
    value: float  # ITC fraction, PTC $/MWh, or sequestration $/tCO2
    through_year: int = 2040  # last eligible build year (ITC) or operating year (PTC, 45Q)

    def __post_init__(self):
        object.__setattr__(self, "techs", frozenset(self.techs))
        if self.kind not in TAX_CREDIT_KINDS:
            raise InvalidParameterError(f"unknown tax credit kind {self.kind!r}")
        if self.kind == "itc" and not 0.0 <= self.value < 1.0:
            raise InvalidParameterError("ITC fraction must be in [0, 1)")
        if self.value < 0:
            raise InvalidParameterError("tax credit value must be >= 0")


@dataclass(frozen=True)
class PolicySet:
    carbon_cap: CarbonCap | None = None
    regional_caps: tuple = ()
    ces_rps: tuple = ()
    min_capacity_targets: tuple = ()
    tax_credits: tuple = ()

    def __post_init__(self):
        for name in ("regional_caps", "ces_rps", "min_capacity_targets", "tax_credits"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def merged(self, other: "PolicySet") -> "PolicySet":
        """Union of two policy sets; ``other``'s national cap wins if both have one."""
        return PolicySet(
            carbon_cap=other.carbon_cap if other.carbon_cap is not None else self.carbon_cap,
            regional_caps=self.regional_caps + other.regional_caps,
            ces_rps=self.ces_rps + other.ces_rps,
            min_capacity_targets=self.min_capacity_targets + other.min_capacity_targets,
            tax_credits=self.tax_credits + other.tax_credits,
        )


RETIREMENT_MODES = ("age_based", "economic")
SEQUENCING_MODES = ("myopic", "foresight")


@dataclass(frozen=True)
class Configuration:
    name: str = "base"
    retirement_mode: str = "age_based"
    unit_commitment: bool = False
    sampled_weeks: int | None = None  # None -> all 52 weeks
    sequencing: str = "myopic"
    operational_sim: bool = False

    def __post_init__(self):
        if self.retirement_mode not in RETIREMENT_MODES:
            raise ConfigurationError(f"unknown retirement_mode {self.retirement_mode!r}")
        if self.sequencing not in SEQUENCING_MODES:
            raise ConfigurationError(f"unknown sequencing {self.sequencing!r}")
        if self.sampled_weeks is not None and not 1 <= self.sampled_weeks <= WEEKS_PER_YEAR:
            raise ConfigurationError("sampled_weeks must be in 1..52")
        if self.sequencing == "foresight" and self.sampled_weeks is None:
            raise ConfigurationError("foresight sequencing requires sampled weeks")

    @property
    def weeks_mode(self) -> str:
        return "full_52" if self.sampled_weeks is None else f"sampled({self.sampled_weeks})"


@dataclass(frozen=True)
class FuelOverride:
    add: float = 0.0
    prices: Mapping[str, float] | None = None  # replaces the schedule when given


@dataclass(frozen=True)
class Scenario:
    name: str
    policy_set: PolicySet = field(default_factory=PolicySet)
    transmission_expansion_limit: float | None = None  # None -> unconstrained
    ccs_allowed: bool = True
    fuel_price_overrides: Mapping[str, FuelOverride] = field(default_factory=dict)
    include_system_policies: bool = False
    transmission_floor_mw: float = 400.0

    def __post_init__(self):
        object.__setattr__(self, "fuel_price_overrides", dict(self.fuel_price_overrides))
        lim = self.transmission_expansion_limit
        if lim is not None and not 0.0 <= lim <= 1.0:
            raise InvalidParameterError("transmission_expansion_limit outside [0, 1]")


@dataclass(frozen=True)
class FinancialParams:
    wacc_default: float = 0.05
    discount_rate: float = 0.02
    unserved_penalty: float = 5000.0
    ptc_transfer_penalty: float = 0.075
    ptc_credit_years: int = 10
    amortization_life: int = 30

    def __post_init__(self):
        for name in ("wacc_default", "discount_rate", "unserved_penalty", "ptc_transfer_penalty"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"{name} must be >= 0")


MONTH_DAYS = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
MONTH_START_HOUR = tuple(int(24 * d) for d in np.concatenate([[0], np.cumsum(MONTH_DAYS)[:-1]]))


def month_of_hour(hour: int) -> int:
    """0-based calendar month of an hour of a non-leap year."""
    day = (hour // 24) % 365
    return int(np.searchsorted(np.cumsum(MONTH_DAYS), day, side="right"))


@dataclass(frozen=True)
class SystemData:
    zones: tuple
    clusters: tuple
    corridors: tuple = ()
    fuels: Mapping[str, FuelSpec] = field(default_factory=dict)
    horizon: PlanningHorizon = field(default_factory=PlanningHorizon)
    hydro_budgets: Mapping[str, tuple] = field(default_factory=dict)  # cluster -> 12 MWh
    policies: PolicySet = field(default_factory=PolicySet)
    financial: FinancialParams = field(default_factory=FinancialParams)
    hours_per_week: int = HOURS_PER_WEEK
    applied_scenario: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "clusters", tuple(self.clusters))
        object.__setattr__(self, "corridors", tuple(self.corridors))
        object.__setattr__(self, "fuels", dict(self.fuels))
        object.__setattr__(
            self, "hydro_budgets", {k: tuple(float(x) for x in v) for k, v in self.hydro_budgets.items()}
        )
        self._check()

    def _check(self):
        ids = [z.id for z in self.zones]
        if len(set(ids)) != len(ids):
            raise InvalidParameterError("duplicate zone ids")
        if not self.zones:
            return
        n = len(self.zones[0].demand)
        for z in self.zones:
            if len(z.demand) != n:
                raise InvalidParameterError(f"zone {z.id}: demand length {len(z.demand)} != {n}")
        cids = [c.id for c in self.clusters]
        if len(set(cids)) != len(cids):
            raise InvalidParameterError("duplicate cluster ids")
        zset = set(ids)
        for c in self.clusters:
            if c.zone not in zset:
                raise InvalidParameterError(f"cluster {c.id}: unknown zone {c.zone}")
            if c.profile is not None and len(c.profile) != n:
                raise InvalidParameterError(f"cluster {c.id}: profile length {len(c.profile)} != {n}")
            if c.tech.fuel is not None and c.tech.fuel not in self.fuels:
                raise InvalidParameterError(f"cluster {c.id}: unknown fuel {c.tech.fuel}")
        pairs = set()
        for k in self.corridors:
            if k.zone_from not in zset or k.zone_to not in zset:
                raise InvalidParameterError(f"corridor {k.id}: unknown zone")
            key = frozenset((k.zone_from, k.zone_to))
            if key in pairs:
                raise InvalidParameterError(f"corridor {k.id}: duplicate zone pair")
            pairs.add(key)
        if n < self.hours_per_week:
            raise InvalidParameterError("series shorter than one week")

    # -- time structure -------------------------------------------------
    @property
    def n_hours(self) -> int:
        return len(self.zones[0].demand) if self.zones else 0

    @property
    def n_weeks(self) -> int:
        return self.n_hours // self.hours_per_week

    @property
    def annual_scale(self) -> float:
        """Hours represented per modelled hour when all weeks carry weight 1.

        8760-hour years hold 52 full weeks plus one spare day; the spare day is
        represented by stretching the weeks rather than modelled explicitly.
        """
        modelled = self.n_weeks * self.hours_per_week
        return self.n_hours / modelled if modelled else 1.0

    # -- lookups ----------------------------------------------------------
    @property
    def zone_ids(self) -> list[str]:
        return [z.id for z in self.zones]

    def zone(self, zone_id: str) -> Zone:
        for z in self.zones:
            if z.id == zone_id:
                return z
        raise KeyError(zone_id)

    def cluster(self, cluster_id: str) -> ResourceCluster:
        for c in self.clusters:
            if c.id == cluster_id:
                return c
        raise KeyError(cluster_id)

    @property
    def generators(self) -> list[ResourceCluster]:
        return [c for c in self.clusters if not c.is_storage]

    @property
    def storage(self) -> list[ResourceCluster]:
        return [c for c in self.clusters if c.is_storage]

    def zones_in_regions(self, regions) -> list[str]:
        regions = set(regions)
        return [z.id for z in self.zones if z.region_tags & regions or z.id in regions]

    def emission_rate(self, cluster: ResourceCluster) -> float:
        """Net tCO2 per MWh generated."""
        tech = cluster.tech
        if tech.emission_rate is not None:
            ef = tech.emission_rate
        elif tech.fuel is not None:
            ef = self.fuels[tech.fuel].emission_factor
        else:
            ef = 0.0
        return cluster.effective_heat_rate * ef * (1.0 - tech.capture_rate)

    def captured_rate(self, cluster: ResourceCluster) -> float:
        """tCO2 captured per MWh generated."""
        tech = cluster.tech
        ef = tech.emission_rate if tech.emission_rate is not None else (
            self.fuels[tech.fuel].emission_factor if tech.fuel is not None else 0.0
        )
        return cluster.effective_heat_rate * ef * tech.capture_rate

    def fuel_price(self, cluster: ResourceCluster, period_label: str) -> float:
        if cluster.tech.fuel is None:
            return 0.0
        return self.fuels[cluster.tech.fuel].price_by_period[period_label]

    def week_hydro_budget(self, cluster_id: str, week: int) -> float:
        """Energy budget (MWh) of one modelled week, taken from its calendar month."""
        budgets = self.hydro_budgets[cluster_id]
        mid_hour = int(round(week * self.hours_per_week + self.hours_per_week / 2))
        m = month_of_hour(mid_hour % HOURS_PER_YEAR)
        return budgets[m] * self.hours_per_week / (24.0 * MONTH_DAYS[m])
