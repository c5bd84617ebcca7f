"""A three-zone synthetic system used by the tests and scripts.

Every week is seven identical days and the year has two seasons (winter
weeks fall in October-March, summer weeks in April-September), so the full
52-week year collapses exactly to two modelled days for planning solves.
"""

from __future__ import annotations

import numpy as np

from cemkit.domain import (
    CapacityTarget,
    CleanStandard,
    FinancialParams,
    FuelSpec,
    PlanningHorizon,
    DEFAULT_PERIODS,
    PolicySet,
    ResourceCluster,
    StorageParams,
    SystemData,
    TaxCredit,
    TechClass,
    TransmissionCorridor,
    Zone,
    MONTH_DAYS,
    month_of_hour,
)
from dataclasses import replace

TOY_CAP_SCALE = 0.01  # share of the national net-zero trajectory assigned to the toy
DEMAND_GROWTH = (1.0, 1.05, 1.12, 1.2, 1.3, 1.4)

TECHS = {
    "coal": TechClass("coal", fuel="coal", heat_rate=10.0, is_firm=True, min_load_fraction=0.4,
                      ramp_fraction_per_hour=0.3, min_up_hours=8, min_down_hours=8, startup_cost_per_mw=100.0),
    "gas_cc": TechClass("gas_cc", fuel="gas", heat_rate=6.5, is_firm=True, min_load_fraction=0.3,
                        ramp_fraction_per_hour=0.6, min_up_hours=4, min_down_hours=4, startup_cost_per_mw=60.0),
    "gas_ct": TechClass("gas_ct", fuel="gas", heat_rate=9.5, is_firm=True, min_load_fraction=0.25,
                        ramp_fraction_per_hour=1.0, min_up_hours=1, min_down_hours=1, startup_cost_per_mw=30.0),
    "ccs": TechClass("ccs", fuel="gas", heat_rate=7.5, is_ccs=True, capture_rate=0.95, is_firm=True,
                     min_load_fraction=0.4, ramp_fraction_per_hour=0.5, min_up_hours=4, min_down_hours=4,
                     startup_cost_per_mw=80.0),
    "nuclear": TechClass("nuclear", fuel="uranium", heat_rate=10.4, is_firm=True, min_load_fraction=0.8,
                         ramp_fraction_per_hour=0.1, min_up_hours=24, min_down_hours=24, startup_cost_per_mw=200.0),
    "h2_ct": TechClass("h2_ct", fuel="hydrogen", heat_rate=9.5, is_firm=True, min_load_fraction=0.25,
                       ramp_fraction_per_hour=1.0, min_up_hours=1, min_down_hours=1, startup_cost_per_mw=30.0),
    "hydro": TechClass("hydro", is_firm=True, is_hydro=True),
    "wind": TechClass("wind", is_variable=True),
    "solar": TechClass("solar", is_variable=True),
    "battery": TechClass("battery", is_storage=True),
}

FUELS = {
    "coal": (2.0, 0.0953),
    "gas": (3.5, 0.0531),
    "uranium": (0.7, 0.0),
    "hydrogen": (16.0, 0.0),
}
GAS_ESCALATION = (1.0, 1.04, 1.08, 1.12, 1.16, 1.2)


def _day_shapes():
    h = np.arange(24)
    load = 0.78 + 0.22 * np.exp(-(((h - 18) / 3.0) ** 2)) + 0.08 * np.exp(-(((h - 9) / 2.0) ** 2))
    load = load / load.max()
    sun = np.clip(np.sin(np.pi * (h - 6) / 12.0), 0.0, None)
    wind = np.cos(2 * np.pi * (h - 3) / 24.0)
    return load, sun, wind


def _season_of_week(week: int, hours_per_week: int = 168) -> str:
    m = month_of_hour(week * hours_per_week + hours_per_week // 2)
    return "summer" if 3 <= m <= 8 else "winter"


def _annual(series_by_season: dict, n_hours: int = 8760, hours_per_week: int = 168) -> np.ndarray:
    out = np.empty(n_hours)
    weeks = n_hours // hours_per_week
    for w in range(weeks):
        out[w * hours_per_week:(w + 1) * hours_per_week] = np.tile(series_by_season[_season_of_week(w)], 7)
    rest = n_hours - weeks * hours_per_week
    if rest:
        out[-rest:] = np.tile(series_by_season["winter"], rest // 24 + 1)[:rest]
    return np.round(out, 6)


def toy_series():
    load, sun, wind = _day_shapes()
    peaks = {"north": (900.0, 800.0), "central": (1600.0, 1800.0), "south": (1100.0, 1500.0)}
    demand = {z: _annual({"winter": np.round(w * load, 3), "summer": np.round(s * load, 3)})
              for z, (w, s) in peaks.items()}
    profiles = {
        "wind_north": _annual({"winter": 0.48 + 0.15 * wind, "summer": 0.32 + 0.12 * wind}),
        "wind_central": _annual({"winter": 0.40 + 0.12 * wind, "summer": 0.26 + 0.10 * wind}),
        "solar_central": _annual({"winter": 0.55 * sun, "summer": 0.85 * sun}),
        "solar_south": _annual({"winter": 0.65 * sun, "summer": 0.95 * sun}),
    }
    return demand, profiles


def _new(cid, zone, tech, capex, fom, vom=0.0, interconnect=0.0, profile=None, max_new=float("inf"), life=30):
    return ResourceCluster(
        id=cid, zone=zone, tech=TECHS[tech], build_year=DEFAULT_PERIODS[0].start_year, lifetime_years=life, new_build_allowed=True,
        max_new_capacity=max_new, capex_overnight=capex, interconnect_capex=interconnect, fixed_om=fom,
        variable_om=vom, profile=profile,
    )


def toy_clusters(profiles):
    existing = [
        ResourceCluster("north_coal", "north", TECHS["coal"], 800.0, 1985, 50, fixed_om=60.0, variable_om=4.0),
        ResourceCluster("central_gas_cc", "central", TECHS["gas_cc"], 1200.0, 2005, 45, fixed_om=15.0,
                        variable_om=2.5, heat_rate=7.0),
        ResourceCluster("south_gas_ct", "south", TECHS["gas_ct"], 500.0, 2000, 40, fixed_om=10.0,
                        variable_om=4.5, heat_rate=10.5),
        ResourceCluster("central_nuclear", "central", TECHS["nuclear"], 600.0, 1990, 60, fixed_om=120.0,
                        variable_om=2.0),
        ResourceCluster("north_hydro", "north", TECHS["hydro"], 300.0, 1970, 100, fixed_om=40.0),
        ResourceCluster("central_wind_old", "central", TECHS["wind"], 400.0, 2015, 30, fixed_om=28.0,
                        profile=profiles["wind_central"]),
    ]
    new = [
        _new("north_gas_cc_new", "north", "gas_cc", 1000.0, 14.0, 2.0),
        _new("central_gas_cc_new", "central", "gas_cc", 1000.0, 14.0, 2.0),
        _new("south_gas_cc_new", "south", "gas_cc", 1050.0, 14.0, 2.0),
        _new("south_gas_ct_new", "south", "gas_ct", 800.0, 8.0, 4.0),
        _new("central_ccs_new", "central", "ccs", 2300.0, 40.0, 5.0),
        _new("south_ccs_new", "south", "ccs", 2400.0, 40.0, 5.0),
        _new("central_h2_ct_new", "central", "h2_ct", 880.0, 9.0, 4.0),
        _new("north_wind_new", "north", "wind", 1300.0, 30.0, interconnect=100.0,
             profile=profiles["wind_north"], max_new=5000.0),
        _new("central_wind_new", "central", "wind", 1350.0, 30.0, interconnect=80.0,
             profile=profiles["wind_central"], max_new=2000.0),
        _new("central_solar_new", "central", "solar", 1000.0, 18.0, interconnect=50.0,
             profile=profiles["solar_central"], max_new=3000.0),
        _new("south_solar_new", "south", "solar", 950.0, 18.0, interconnect=50.0,
             profile=profiles["solar_south"], max_new=4000.0),
    ]
    storage = [
        ResourceCluster("central_battery", "central", TECHS["battery"], build_year=2027, lifetime_years=30,
                        new_build_allowed=True, fixed_om=8.0,
                        storage=StorageParams(power_capex=300.0, energy_capex=250.0, round_trip_efficiency=0.85)),
        ResourceCluster("south_battery", "south", TECHS["battery"], build_year=2027, lifetime_years=30,
                        new_build_allowed=True, fixed_om=8.0,
                        storage=StorageParams(power_capex=320.0, energy_capex=260.0, round_trip_efficiency=0.85,
                                              duration_fixed_hours=4.0)),
    ]
    # existing fleet: no new entry, ordered by id as the unit loader emits it
    existing = sorted((replace(c, max_new_capacity=0.0) for c in existing), key=lambda c: c.id)
    return existing + new + storage


def toy_policies() -> PolicySet:
    """State-style policies for the current-policies scenario."""
    return PolicySet(
        ces_rps=(CleanStandard(regions=frozenset({"southern"}),
                               fractions={"2030": 0.25, "2035": 0.35, "2040": 0.45, "2045": 0.55, "2050": 0.6},
                               name="south_ces"),),
        min_capacity_targets=(
            CapacityTarget(regions=frozenset({"northern"}), techs=frozenset({"wind"}),
                           targets={"2035": 500.0, "2040": 900.0, "2045": 1200.0, "2050": 1500.0},
                           name="north_wind_target"),
            # state support keeps the existing nuclear plant open until it lapses after 2035
            CapacityTarget(regions=frozenset({"midland"}), techs=frozenset({"nuclear"}),
                           targets={"2027": 600.0, "2030": 600.0, "2035": 600.0},
                           name="central_nuclear_support"),
        ),
        tax_credits=(
            TaxCredit(frozenset({"wind", "solar"}), "ptc", 27.5, 2040),
            TaxCredit(frozenset({"battery"}), "itc", 0.3, 2040),
            TaxCredit(frozenset({"ccs"}), "sequestration", 85.0, 2040),
        ),
    )


def build_toy_system(hours: int = 8760) -> SystemData:
    demand, profiles = toy_series()
    zones = [
        Zone("north", demand["north"][:hours], frozenset({"northern"})),
        Zone("central", demand["central"][:hours], frozenset({"midland"})),
        Zone("south", demand["south"][:hours], frozenset({"southern"})),
    ]
    profiles = {k: v[:hours] for k, v in profiles.items()}
    labels = [p.label for p in DEFAULT_PERIODS]
    fuels = {}
    for fid, (price, ef) in FUELS.items():
        esc = GAS_ESCALATION if fid == "gas" else (1.0,) * len(labels)
        fuels[fid] = FuelSpec(fid, {l: round(price * e, 6) for l, e in zip(labels, esc)}, ef)
    periods = tuple(replace(p, demand_scale=g) for p, g in zip(DEFAULT_PERIODS, DEMAND_GROWTH))
    # monthly budgets proportional to days in month, so every week of a season gets the same budget
    hydro_cf = [0.45 if 3 <= m <= 8 else 0.6 for m in range(12)]
    hydro = {"north_hydro": tuple(round(cf * 300.0 * 24 * d) for cf, d in zip(hydro_cf, MONTH_DAYS))}
    corridors = [
        TransmissionCorridor("north_central", "north", "central", 1200.0, 0.02, 9_000.0, intra_regional_adder=True),
        TransmissionCorridor("central_south", "central", "south", 1000.0, 0.03, 12_000.0),
    ]
    return SystemData(
        zones=zones,
        clusters=toy_clusters(profiles),
        corridors=corridors,
        fuels=fuels,
        horizon=PlanningHorizon(periods),
        hydro_budgets=hydro,
        policies=toy_policies(),
        financial=FinancialParams(),
    )
