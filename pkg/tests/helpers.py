"""Small hand-checkable systems and cached toy runs shared by the tests."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from cemkit.domain import (
    Configuration,
    FuelSpec,
    Period,
    PlanningHorizon,
    PolicySet,
    ResourceCluster,
    Scenario,
    StorageParams,
    SystemData,
    TechClass,
    Zone,
)
from cemkit.formulation import build_period_problem, read_period, time_blocks
from cemkit.ingest import CONFIGURATIONS, current_policies, net_zero
from cemkit.sequencer import run_plan, simulate_plan
from cemkit.solver import SolveSettings, solve
from cemkit.toy import TOY_CAP_SCALE, build_toy_system

ONE_PERIOD = PlanningHorizon((Period("2030", 2028, 2030),))
PLAIN = Configuration("plain")

GAS = TechClass("gas", fuel="gas", heat_rate=10.0)
WIND = TechClass("wind", is_variable=True)
HYDRO = TechClass("hydro", is_hydro=True, is_firm=True)
BATTERY = TechClass("battery", is_storage=True)
UC_GAS = TechClass("gas_uc", fuel="gas", heat_rate=10.0, is_firm=True, min_load_fraction=0.5, ramp_fraction_per_hour=1.0,
                   min_up_hours=1, min_down_hours=1, startup_cost_per_mw=100.0)


def gas(cid="g", zone="z", mw=20.0, **kw):
    return ResourceCluster(cid, zone, kw.pop("tech", GAS), mw, build_year=kw.pop("build_year", 2020), **kw)


def battery(cid="b", zone="z", **kw):
    st = StorageParams(**{k: kw.pop(k) for k in list(kw) if k in StorageParams.__dataclass_fields__})
    return ResourceCluster(cid, zone, BATTERY, kw.pop("existing", 0.0), build_year=2028, storage=st, **kw)


def tiny(demand, clusters, *, corridors=(), horizon=ONE_PERIOD, fuel_price=2.0, ef=0.05, hydro=None,
         regions=None) -> SystemData:
    """A system whose single modelled week is the given hours."""
    if not isinstance(demand, dict):
        demand = {"z": demand}
    zones = [Zone(z, np.asarray(d, dtype=float), frozenset((regions or {}).get(z, ())))
             for z, d in demand.items()]
    n = len(zones[0].demand)
    fuels = {"gas": FuelSpec("gas", {p.label: fuel_price for p in horizon.periods}, ef)}
    return SystemData(zones=zones, clusters=clusters, corridors=corridors, fuels=fuels, horizon=horizon,
                      hydro_budgets=hydro or {}, hours_per_week=n)


def scenario(policy=None, **kw) -> Scenario:
    return Scenario(kw.pop("name", "s"), policy_set=policy or PolicySet(), **kw)


def solve_period(system, scen=None, config=PLAIN, period=None, backend="highs", **kw):
    """Build and solve one period; returns (problem, context, solution, readout)."""
    scen = scen or scenario()
    period = period or system.horizon.periods[0]
    if "blocks" not in kw:
        kw["blocks"] = time_blocks(system)
    problem = build_period_problem(system, scen, config, period, **kw)
    sol = solve(problem, SolveSettings(backend=backend))
    ctx = problem.meta["contexts"][0]
    readout = read_period(problem, ctx, sol.x, sol.duals) if sol.optimal else None
    return problem, ctx, sol, readout


# -- toy runs (cached per process) ---------------------------------------------

@lru_cache(maxsize=None)
def toy_system():
    return build_toy_system()


def toy_scenario(name="net_zero"):
    if name == "current_policies":
        return current_policies()
    variants = {
        "net_zero": {},
        "tx0": {"transmission_limit": 0.0},
        "tx15": {"transmission_limit": 0.15},
        "tx50": {"transmission_limit": 0.5},
        "no_ccs": {"ccs_allowed": False},
        "buyout50": {"buyout_price": 50.0},
        "buyout1000": {"buyout_price": 1000.0},
    }
    return net_zero(cap_scale=TOY_CAP_SCALE, **variants[name])


@lru_cache(maxsize=None)
def toy_plan(scen="net_zero", config="base", backend="highs"):
    cfg = CONFIGURATIONS[config] if isinstance(config, str) else config
    return run_plan(toy_system(), toy_scenario(scen), cfg, SolveSettings(backend=backend))


@lru_cache(maxsize=None)
def toy_sims(scen="net_zero", config="base", backend="highs"):
    return simulate_plan(toy_system(), toy_scenario(scen), toy_plan(scen, config, backend),
                         SolveSettings(backend="highs"))
