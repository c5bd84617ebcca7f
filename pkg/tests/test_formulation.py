"""Constraint blocks on LPs small enough to solve by hand or by grid search."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cemkit.domain import (
    CapacityTarget,
    CarbonCap,
    CleanStandard,
    Configuration,
    FinancialParams,
    Period,
    PlanningHorizon,
    PolicySet,
    ResourceCluster,
    TaxCredit,
    TechClass,
    TransmissionCorridor,
)
from cemkit.errors import ConfigurationError, SchemaError
from cemkit.finance import capital_recovery_factor
from cemkit.formulation import (
    FixedCapacity,
    build_foresight_problem,
    build_period_problem,
    read_period,
    time_blocks,
    transmission_expansion_bound,
)
from cemkit.ingest import sample_weeks
from cemkit.solver import SolveSettings, infeasible_rows, solve
from helpers import (
    GAS,
    HYDRO,
    UC_GAS,
    WIND,
    battery,
    gas,
    scenario,
    solve_period,
    tiny,
    toy_scenario,
    toy_system,
)

YEARS = 3  # myopic weight of the helper's one period (2028-2030)
FUEL = 20.0  # $/MWh: 2 $/MMBTU x 10 MMBTU/MWh


def coefs_of_row(problem, row):
    A = problem.A.tocsr()
    lo, hi = A.indptr[row], A.indptr[row + 1]
    return {problem.var_tags[j]: v for j, v in zip(A.indices[lo:hi], A.data[lo:hi])}


# -- dispatch block ----------------------------------------------------------------

def test_balance_row_structure():
    p, ctx, sol, r = solve_period(tiny([10.0], [gas(mw=20.0)]))
    (row,) = p.find_rows("balance")
    assert coefs_of_row(p, row) == {("gen", "g", "2030", 0): 1.0, ("unserved", "z", "2030", 0): 1.0}
    assert p.rhs[row] == 10.0
    assert r.generation["g"] == pytest.approx(10.0)


def test_zero_demand_costs_nothing():
    p, ctx, sol, r = solve_period(tiny([0.0, 0.0, 0.0], [gas()]))
    assert sol.objective == pytest.approx(0.0, abs=1e-9)
    assert sum(r.generation.values()) == pytest.approx(0.0, abs=1e-9)


def test_shortfall_is_priced_at_penalty():
    p, ctx, sol, r = solve_period(tiny([10.0], [gas(mw=4.0)]))
    assert r.unserved["z"] == pytest.approx(6.0)
    assert r.costs["unserved"] == pytest.approx(6 * 5000.0)
    assert sol.objective == pytest.approx(YEARS * (6 * 5000.0 + 4 * FUEL))


def test_hand_sum_objective():
    g = gas(mw=20.0, fixed_om=10.0, variable_om=2.0)
    p, ctx, sol, r = solve_period(tiny([5.0, 15.0], [g]))
    hand = 10.0 * 1e3 * 20.0 + (2.0 + FUEL) * 20.0
    assert sol.objective == pytest.approx(YEARS * hand, rel=1e-12)
    assert r.costs == pytest.approx({"fixed_om": 200_000.0, "fuel": FUEL * 20, "unserved": 0.0, "variable_om": 40.0})


def test_empty_system_objective_zero():
    p, ctx, sol, r = solve_period(tiny([0.0], []))
    assert sol.optimal and sol.objective == 0.0


# -- storage -------------------------------------------------------------------------

def test_storage_arbitrage_matches_grid_search():
    wind = ResourceCluster("w", "z", WIND, 20.0, build_year=2020, profile=np.array([1.0, 0.0]))
    st = battery(existing_power=10.0, existing_energy=100.0, round_trip_efficiency=0.81)
    p, ctx, sol, r = solve_period(tiny([0.0, 10.0], [wind, gas(), st]))
    # grid oracle: charge c in the windy hour, deliver 0.81 c later, gas covers the rest
    grid = np.linspace(0, 10, 100_001)
    cost = FUEL * np.maximum(0.0, 10.0 - 0.81 * grid)
    assert sol.objective == pytest.approx(YEARS * cost.min(), rel=1e-6)
    assert r.charge["b"] == pytest.approx(10.0, abs=1e-5)
    assert r.generation["b"] == pytest.approx(8.1, abs=1e-5)


def test_lossless_storage_on_flat_week_adds_nothing():
    flat = [10.0] * 6
    with_st = solve_period(tiny(flat, [gas(), battery(existing_power=5.0, existing_energy=20.0)]))
    without = solve_period(tiny(flat, [gas()]))
    assert with_st[2].objective == pytest.approx(without[2].objective, rel=1e-9)
    r = with_st[3]
    assert r.charge["b"] == pytest.approx(r.generation["b"], abs=1e-6)


def test_fixed_duration_slaves_energy():
    st = battery(power_capex=10.0, energy_capex=5.0, duration_fixed_hours=4.0, round_trip_efficiency=0.9,
                 new_build_allowed=True)
    wind = ResourceCluster("w", "z", WIND, 50.0, build_year=2020, profile=np.array([1.0, 1.0, 0.0, 0.0]))
    p, ctx, sol, r = solve_period(tiny([5.0, 5.0, 20.0, 20.0], [wind, gas(mw=10.0), st]))
    assert r.build["b"] > 1.0
    assert r.energy_capacity["b"] == pytest.approx(4.0 * r.capacity["b"], rel=1e-9)


def test_state_of_charge_is_cyclic_and_bounded():
    st = battery(existing_power=10.0, existing_energy=15.0, round_trip_efficiency=0.81)
    wind = ResourceCluster("w", "z", WIND, 30.0, build_year=2020, profile=np.array([1, 1, 0, 0, 1, 0.0]))
    p, ctx, sol, r = solve_period(tiny([5.0] * 6, [wind, gas(), st]))
    soc = sol.x[ctx.soc["b"]]
    ch, dis = sol.x[ctx.charge["b"]], sol.x[ctx.discharge["b"]]
    step = soc - np.roll(soc, 1) - 0.9 * ch + dis / 0.9
    assert np.max(np.abs(step)) <= 1e-7
    assert soc.max() <= 15.0 + 1e-7 and max(ch.max(), dis.max()) <= 10.0 + 1e-7


# -- hydro ---------------------------------------------------------------------------

def _hydro_budget(mwh_per_week, hours):
    # the helper week sits in January: week budget = monthly x hours / (24 x 31)
    return {"h": (mwh_per_week * 24 * 31 / hours,) * 12}


def test_zero_budget_blocks_hydro():
    h = ResourceCluster("h", "z", HYDRO, 10.0, build_year=2020)
    p, ctx, sol, r = solve_period(tiny([5.0, 5.0], [h, gas()], hydro=_hydro_budget(0.0, 2)))
    assert r.generation["h"] == pytest.approx(0.0, abs=1e-7)


def test_generous_budget_never_binds():
    h = ResourceCluster("h", "z", HYDRO, 10.0, build_year=2020)
    p, ctx, sol, r = solve_period(tiny([5.0, 5.0], [h, gas()], hydro=_hydro_budget(10.0 * 168, 2)))
    (row,) = p.find_rows("hydro_budget")
    assert sol.duals[row] == pytest.approx(0.0, abs=1e-6)
    assert r.generation["h"] == pytest.approx(10.0)


def test_marginal_hydro_budget_has_fuel_value():
    h = ResourceCluster("h", "z", HYDRO, 10.0, build_year=2020)
    p, ctx, sol, r = solve_period(tiny([10.0, 10.0], [h, gas()], hydro=_hydro_budget(10.0, 2)))
    (row,) = p.find_rows("hydro_budget")
    # one more MWh of water displaces one MWh of gas in each of the period's years
    assert -sol.duals[row] == pytest.approx(YEARS * FUEL, rel=1e-6)
    assert r.generation["h"] == pytest.approx(10.0)


def test_missing_hydro_budget():
    h = ResourceCluster("h", "z", HYDRO, 10.0, build_year=2020)
    with pytest.raises(SchemaError):
        solve_period(tiny([5.0], [h]))


# -- transmission --------------------------------------------------------------------

@pytest.mark.parametrize("existing,fraction,expected", [
    (1000.0, 0.15, 400.0), (10000.0, 0.5, 5000.0), (1000.0, 0.0, 0.0), (100.0, 0.5, 400.0),
    (1000.0, None, float("inf")),
])
def test_expansion_bound(existing, fraction, expected):
    assert transmission_expansion_bound(existing, fraction) == expected


def _two_zone(limit=None, cost=0.0, adder=False, existing=5.0, demand=10.0):
    k = TransmissionCorridor("ab", "a", "b", existing, 0.1, cost, intra_regional_adder=adder)
    s = tiny({"a": [0.0], "b": [demand]}, [gas("g", "a", mw=1000.0)], corridors=[k])
    return solve_period(s, scenario(transmission_expansion_limit=limit))


def test_losses_taken_on_receipt():
    p, ctx, sol, r = _two_zone(limit=0.0)
    fwd, rev = r.flows["ab"]
    assert fwd == pytest.approx(5.0) and rev == pytest.approx(0.0, abs=1e-9)
    assert r.generation["g"] == pytest.approx(5.0)
    assert r.unserved["b"] == pytest.approx(10.0 - 0.9 * 5.0)
    assert p.find_vars("tx_build").size == 0


def test_expansion_respects_floor_and_cost():
    p, ctx, sol, r = _two_zone(limit=0.15, cost=1000.0, existing=5.0, demand=500.0)
    (x,) = p.find_vars("tx_build")
    assert p.ub[x] == 400.0
    assert r.corridor_build["ab"] == pytest.approx(400.0)
    assert r.costs["transmission"] == pytest.approx(400.0 * 1000.0)


def test_intra_regional_adder_doubles_loss_and_cost():
    p, ctx, sol, r = _two_zone(limit=0.15, cost=1000.0, adder=True, demand=50.0)
    fwd, _ = r.flows["ab"]
    assert r.generation["g"] == pytest.approx(fwd)
    assert 0.8 * fwd == pytest.approx(50.0)
    assert r.costs["transmission"] == pytest.approx(2000.0 * r.corridor_build["ab"])


# -- unit commitment -----------------------------------------------------------------

def _uc_system(demand, **tech):
    t = replace(UC_GAS, **tech)
    return tiny(demand, [gas(tech=t, mw=100.0)])


def test_min_load_window():
    s = _uc_system([60.0, 60.0], min_load_fraction=0.5)
    p, ctx, sol, r = solve_period(s, unit_commitment=True)
    g, u = sol.x[ctx.gen["g"]], sol.x[ctx.commit["g"]]
    assert np.all(g >= 0.5 * u - 1e-7) and np.all(g <= u + 1e-7)
    for row in p.find_rows("min_load"):
        c = coefs_of_row(p, row)
        assert sorted(c.values()) == [-0.5, 1.0]


def test_ramp_limit():
    s = _uc_system([0.0, 100.0], min_load_fraction=0.0, ramp_fraction_per_hour=0.2)
    p, ctx, sol, r = solve_period(s, unit_commitment=True)
    g = sol.x[ctx.gen["g"]]
    assert g[1] == pytest.approx(20.0, abs=1e-6)
    assert r.unserved["z"] == pytest.approx(80.0, abs=1e-6)


def test_startup_charged_once():
    s = _uc_system([0.0, 50.0, 50.0], min_load_fraction=0.5, startup_cost_per_mw=100.0)
    p, ctx, sol, r = solve_period(s, unit_commitment=True)
    assert r.costs["startup"] == pytest.approx(5000.0, rel=1e-6)
    u = sol.x[ctx.commit["g"]]
    assert u == pytest.approx([0.0, 50.0, 50.0], abs=1e-6)


def test_min_up_time_keeps_unit_on():
    # a 3-hour minimum up time forces commitment through a demand gap
    s = _uc_system([0.0, 60.0, 0.0, 0.0, 60.0, 0.0], min_load_fraction=0.5, min_up_hours=3,
                   startup_cost_per_mw=1000.0)
    p, ctx, sol, r = solve_period(s, unit_commitment=True)
    u, st = sol.x[ctx.commit["g"]], sol.x[ctx.startup["g"]]
    for t in range(ctx.T):
        win = range(max(0, t - 2), t + 1)
        assert u[t] >= sum(st[k] for k in win) - 1e-6


def test_uc_off_has_no_commitment():
    p, *_ = solve_period(_uc_system([10.0, 20.0]))
    assert p.find_vars("commit").size == 0 and p.find_rows("min_load").size == 0


def test_uc_needs_parameters():
    with pytest.raises(ConfigurationError, match="lacks UC parameters"):
        solve_period(tiny([10.0], [gas(tech=replace(GAS, is_firm=True))]), unit_commitment=True)


# -- retirement ----------------------------------------------------------------------

def test_age_based_drops_expired_vintage():
    old = gas(mw=20.0, build_year=1980, lifetime_years=40)
    p, ctx, sol, r = solve_period(tiny([10.0], [old]))
    assert r.capacity["g"] == 0.0
    assert r.unserved["z"] == pytest.approx(10.0)


def _retirement_oracle(fom, demand=20.0, cap=20.0):
    """Grid search over retained MW for the one-hour, one-cluster problem."""
    r = np.linspace(0.0, cap, 20_001)
    served = np.minimum(r, demand)
    cost = YEARS * (fom * 1e3 * r + FUEL * served + 5000.0 * (demand - served))
    i = int(np.argmin(cost))
    return r[i], cost[i]


ECONOMIC = Configuration("econ", retirement_mode="economic")


@pytest.mark.parametrize("fom,expected_r", [(10.0, 0.0), (1.0, 20.0)])
def test_economic_retirement_against_grid(fom, expected_r):
    s = tiny([20.0], [gas(mw=20.0, fixed_om=fom)])
    p, ctx, sol, r = solve_period(s, config=ECONOMIC)
    r_star, cost = _retirement_oracle(fom)
    assert r_star == expected_r
    assert r.retained["g"] == pytest.approx(expected_r, abs=1e-6)
    assert sol.objective == pytest.approx(cost, rel=1e-9)


def test_economic_can_keep_expired_generator():
    old = gas(mw=20.0, build_year=1980, lifetime_years=40, fixed_om=1.0)
    p, ctx, sol, r = solve_period(tiny([20.0], [old]), config=ECONOMIC)
    assert r.capacity["g"] == pytest.approx(20.0)


# -- carbon cap and buyout -----------------------------------------------------------

def _cap_policy(limit, price=200.0):
    return PolicySet(carbon_cap=CarbonCap({"2030": limit}, buyout_price=price))


def test_infinite_cap_has_no_row():
    p, *_ = solve_period(tiny([10.0], [gas()]), scenario(_cap_policy(float("inf"))))
    assert p.find_rows("carbon_cap").size == 0


def test_zero_cap_charges_buyout_on_every_tonne():
    p, ctx, sol, r = solve_period(tiny([10.0], [gas()]), scenario(_cap_policy(0.0)))
    tonnes = 10.0 * 10.0 * 0.05
    assert r.emissions == pytest.approx(tonnes)
    assert sol.objective == pytest.approx(YEARS * (10.0 * FUEL + 200.0 * tonnes), rel=1e-9)


def test_interior_excess_prices_cap_at_buyout():
    p, ctx, sol, r = solve_period(tiny([10.0, 8.0], [gas()]), scenario(_cap_policy(1.0)))
    assert r.excess["national"] > 0.1
    assert r.carbon_price["national"] == pytest.approx(200.0, abs=1e-4)


def test_slack_cap_has_zero_price():
    p, ctx, sol, r = solve_period(tiny([10.0], [gas()]), scenario(_cap_policy(100.0)))
    assert r.carbon_price["national"] == pytest.approx(0.0, abs=1e-6)


def test_regional_cap_region_must_match():
    pol = PolicySet(regional_caps=(CarbonCap({"2030": 0.0}, regions=frozenset({"mars"}), name="r"),))
    with pytest.raises(SchemaError):
        solve_period(tiny([10.0], [gas()]), scenario(pol))


def test_emissions_expression_matches_accounting():
    ccs = TechClass("ccs", fuel="gas", heat_rate=7.5, is_ccs=True, capture_rate=0.95)
    s = tiny([30.0, 10.0], [gas(mw=15.0), gas("c", tech=ccs, mw=15.0)])
    p, ctx, sol, r = solve_period(s, scenario(_cap_policy(50.0)))
    hand = r.generation["g"] * 10.0 * 0.05 + r.generation["c"] * 7.5 * 0.05 * 0.05
    assert r.emissions == pytest.approx(hand, rel=1e-9)


# -- clean energy standard -----------------------------------------------------------

def _ces(f):
    return PolicySet(ces_rps=(CleanStandard(frozenset({"clean"}), {"2030": f}),))


def _wind_option(capex=1000.0):
    return ResourceCluster("w", "z", WIND, 0.0, build_year=2028, new_build_allowed=True, capex_overnight=capex,
                           profile=np.array([1.0]))


def test_zero_fraction_is_vacuous():
    p, *_ = solve_period(tiny([10.0], [gas()], regions={"z": {"clean"}}), scenario(_ces(0.0)))
    assert p.find_rows("clean_standard").size == 0


def test_full_standard_against_grid():
    s = tiny([10.0], [gas(), _wind_option(capex=30_000.0)], regions={"z": {"clean"}})
    p, ctx, sol, r = solve_period(s, scenario(_ces(1.0)))
    # grid oracle: build w MW of wind, serve w, shed the rest (gas cannot count toward the standard)
    a = 30_000.0 * 1e3 * capital_recovery_factor(0.05, 30)
    w = np.linspace(0.0, 10.0, 10_001)
    cost = YEARS * (a * w + 5000.0 * (10.0 - w))
    assert sol.objective == pytest.approx(cost.min(), rel=1e-6)
    assert r.generation["g"] == pytest.approx(0.0, abs=1e-6)


def test_half_standard_with_ample_wind_is_slack():
    wind = ResourceCluster("w", "z", WIND, 50.0, build_year=2020, profile=np.array([1.0]))
    s = tiny([10.0], [gas(), wind], regions={"z": {"clean"}})
    p, ctx, sol, r = solve_period(s, scenario(_ces(0.5)))
    (row,) = p.find_rows("clean_standard")
    assert p.A[row] @ sol.x - p.rhs[row] >= -1e-7


# -- capacity targets ----------------------------------------------------------------

def _target(mw):
    return PolicySet(min_capacity_targets=(CapacityTarget(frozenset({"coast"}), frozenset({"wind"}),
                                                          {"2030": mw}, name="offshore"),))


def test_target_forces_build():
    s = tiny([10.0], [gas(), _wind_option()], regions={"z": {"coast"}})
    p, ctx, sol, r = solve_period(s, scenario(_target(500.0)))
    assert r.build["w"] >= 500.0 - 1e-6


def test_zero_target_is_vacuous():
    s = tiny([10.0], [gas(), _wind_option()], regions={"z": {"coast"}})
    p, *_ = solve_period(s, scenario(_target(0.0)))
    assert p.find_rows("capacity_target").size == 0


def test_unreachable_target_is_tagged():
    w = replace(_wind_option(), max_new_capacity=100.0)
    s = tiny([10.0], [gas(), w], regions={"z": {"coast"}})
    p, ctx, sol, r = solve_period(s, scenario(_target(500.0)))
    assert sol.status == "infeasible"
    rows = infeasible_rows(p, lambda q: solve(q, SolveSettings(backend="highs")))
    assert "capacity_target[offshore,2030]" in rows
    assert len(rows) <= 3


# -- objective -----------------------------------------------------------------------

def _scaled(k):
    g = gas(mw=15.0, fixed_om=3.0, variable_om=1.5)
    w = replace(_wind_option(capex=1500.0), profile=np.array([0.3, 0.9]), fixed_om=20.0)
    s = tiny([10.0, 14.0], [g, w], fuel_price=2.0 * k)
    s = replace(s, clusters=tuple(replace(c, fixed_om=c.fixed_om * k, variable_om=c.variable_om * k,
                                          capex_overnight=c.capex_overnight * k) for c in s.clusters),
                financial=FinancialParams(unserved_penalty=5000.0 * k))
    return solve_period(s)[2].objective


@given(st.floats(0.25, 8.0))
def test_objective_is_homogeneous_in_costs(k):
    assert _scaled(k) == pytest.approx(k * _scaled(1.0), rel=1e-7)


def test_doubling_costs_doubles_objective():
    assert _scaled(2.0) == pytest.approx(2.0 * _scaled(1.0), rel=1e-7)


# -- whole-period problems on the toy ------------------------------------------------

@pytest.fixture(scope="module")
def toy_period():
    s = toy_system()
    sc = toy_scenario("net_zero")
    blocks = time_blocks(s, compress_days=True)
    p = build_period_problem(s, sc, Configuration("base"), s.horizon.periods[0], blocks=blocks)
    return p, p.meta["contexts"][0]


def test_variable_counts(toy_period):
    p, ctx = toy_period
    sys = p.meta["system"]
    T, Z = ctx.T, len(sys.zones)
    G, S, K = len(sys.generators), len(sys.storage), len(sys.corridors)
    counts = {}
    for t in p.var_tags:
        counts[t[0]] = counts.get(t[0], 0) + 1
    assert counts["gen"] == G * T
    assert counts["unserved"] == Z * T
    assert counts["charge"] == counts["discharge"] == counts["soc"] == S * T
    assert counts["flow_fwd"] == counts["flow_rev"] == K * T
    assert counts["build"] == sum(1 for c in sys.clusters if c.new_build_allowed and c.max_new_capacity > 0)
    assert counts["tx_build"] == K
    assert "commit" not in counts
    assert p.find_rows("balance").size == Z * T


def test_row_audit(toy_period):
    """Re-derive the audited row kinds from system data alone."""
    p, ctx = toy_period
    sys = p.meta["system"]
    A = p.A.tocsr()
    label = ctx.label
    for i, tag in enumerate(p.row_tags):
        kind = tag[0]
        lo, hi = A.indptr[i], A.indptr[i + 1]
        got = {p.var_tags[j]: v for j, v in zip(A.indices[lo:hi], A.data[lo:hi])}
        if kind == "balance":
            _, z, _, t = tag
            want = {("unserved", z, label, t): 1.0}
            for c in sys.clusters:
                if c.zone != z:
                    continue
                if c.is_storage:
                    want[("discharge", c.id, label, t)] = 1.0
                    want[("charge", c.id, label, t)] = -1.0
                else:
                    want[("gen", c.id, label, t)] = 1.0
            for k in sys.corridors:
                keep = 1.0 - k.effective_loss
                if k.zone_from == z:
                    want[("flow_fwd", k.id, label, t)] = -1.0
                    want[("flow_rev", k.id, label, t)] = keep
                if k.zone_to == z:
                    want[("flow_fwd", k.id, label, t)] = keep
                    want[("flow_rev", k.id, label, t)] = -1.0
            assert got == pytest.approx(want), tag
            assert p.rhs[i] == pytest.approx(sys.zone(z).demand[ctx.hours[t]] * ctx.period.demand_scale)
        elif kind == "gen_cap":
            _, cid, _, t = tag
            c = sys.cluster(cid)
            cf = 1.0 if c.profile is None else c.profile[ctx.hours[t]]
            want = {("gen", cid, label, t): 1.0, ("cap", cid, label): -cf}
            assert got == pytest.approx({k: v for k, v in want.items() if v != 0.0}), tag
        elif kind == "carbon_cap":
            for c in sys.generators:
                rate = c.effective_heat_rate * sys.fuels[c.tech.fuel].emission_factor * (1 - c.tech.capture_rate) \
                    if c.tech.fuel else 0.0
                for t in range(ctx.T):
                    key = ("gen", c.id, label, t)
                    assert got.get(key, 0.0) == pytest.approx(rate * ctx.hour_weight[t] * ctx.weight, rel=1e-12)
            assert got[("excess", "national", label)] == -ctx.weight


def test_operational_mode_fixes_capacity():
    s = toy_system()
    sc = toy_scenario("net_zero")
    fixed = FixedCapacity({c.id: 100.0 for c in s.clusters},
                          {c.id: 400.0 for c in s.storage}, {k.id: 500.0 for k in s.corridors})
    p = build_period_problem(s, sc, Configuration("op", unit_commitment=True, operational_sim=True),
                             s.horizon.periods[0], fixed=fixed, blocks=time_blocks(s, [(0, 1.0)] and None),
                             unit_commitment=True)
    for kind in ("cap", "build", "retain", "tx_build", "energy_build", "tx_cap"):
        assert p.find_vars(kind).size == 0, kind
    assert p.find_vars("commit").size > 0


# -- foresight -----------------------------------------------------------------------

def _short_toy(n_periods, discount=0.02):
    s = toy_system()
    h = PlanningHorizon(s.horizon.periods[:n_periods], discount)
    return replace(s, horizon=h)


def test_one_period_foresight_equals_myopic():
    s = _short_toy(1, discount=0.0)
    sc = toy_scenario("net_zero")
    cfg = Configuration("f", sampled_weeks=20, sequencing="foresight")
    blocks = time_blocks(s, sample_weeks(s, 20), compress_days=True)
    pf = build_foresight_problem(s, sc, cfg, blocks=blocks)
    pm = build_period_problem(s, sc, replace(cfg, sequencing="myopic"), s.horizon.periods[0], blocks=blocks)
    a, b = solve(pf), solve(pm)
    assert a.objective == pytest.approx(b.objective, rel=1e-8)


def test_discounting_scales_single_period_uniformly():
    s = _short_toy(1)
    sc = toy_scenario("net_zero")
    cfg = Configuration("f", sampled_weeks=20, sequencing="foresight")
    blocks = time_blocks(s, sample_weeks(s, 20), compress_days=True)
    a = solve(build_foresight_problem(s, sc, cfg, blocks=blocks))
    b = solve(build_period_problem(s, sc, replace(cfg, sequencing="myopic"), s.horizon.periods[0], blocks=blocks))
    w = sum(1.02 ** -k for k in range(4))
    assert a.objective / w == pytest.approx(b.objective / 4.0, rel=1e-7)


def test_identical_periods_without_discounting_build_up_front():
    periods = (Period("p1", 2028, 2030), Period("p2", 2031, 2033))
    w = _wind_option(capex=1000.0)
    s = tiny([10.0, 4.0], [gas(mw=30.0), replace(w, profile=np.array([0.8, 0.4]))],
             horizon=PlanningHorizon(periods, 0.0))
    cfg = Configuration("f", sampled_weeks=1, sequencing="foresight")
    pf = build_foresight_problem(s, scenario(), cfg, blocks=time_blocks(s))
    sol = solve(pf)
    ctxs = pf.meta["contexts"]
    r1, r2 = (read_period(pf, c, sol.x) for c in ctxs)
    # the myopic sequence (build once, reuse) is optimal: same total as two single-period solves
    single = solve_period(replace(s, horizon=PlanningHorizon(periods[:1], 0.0)))[2].objective
    assert sol.objective == pytest.approx(2 * single, rel=1e-7)
    assert r2.build.get("w", 0.0) == pytest.approx(0.0, abs=1e-4)
    assert r1.capacity["w"] == pytest.approx(r2.capacity["w"], abs=1e-4)


def test_ptc_window_closes_mid_horizon():
    s = toy_system()
    sc = toy_scenario("current_policies")
    cfg = Configuration("f", sampled_weeks=2, sequencing="foresight")
    p = build_foresight_problem(s, sc, cfg, blocks=time_blocks(s, sample_weeks(s, 2), compress_days=True))
    periods = {t.period for t in p.cost_terms if t.component == "ptc"}
    assert periods == {"2027", "2030", "2035", "2040"}
    seq = {t.period for t in p.cost_terms if t.component == "sequestration"}
    assert seq == {"2027", "2030", "2035", "2040"}


def test_ptc_only_for_new_build():
    wind_old = ResourceCluster("old", "z", WIND, 10.0, build_year=2020, profile=np.array([1.0]))
    pol = PolicySet(tax_credits=(TaxCredit(frozenset({"wind"}), "ptc", 27.5, 2040),))
    p, ctx, sol, r = solve_period(tiny([5.0], [wind_old, _wind_option()]), scenario(pol))
    credited = {p.var_tags[i][1] for t in p.cost_terms if t.component == "ptc" for i in t.index}
    assert credited == {"w"}
