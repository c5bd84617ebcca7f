"""Assemble whole problems for one myopic period or the joint foresight horizon, optionally with frozen capacity."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from cemkit.domain import Configuration, Period, Scenario, SystemData
from cemkit.finance import period_discount_weight
from cemkit.formulation.blocks import (
    CapRef,
    FixedCapacity,
    PeriodContext,
    add_capacity_costs,
    add_operations,
    add_retirement_variables,
    annuity_per_mw,
    assemble_objective,
    emission_entries,
    time_blocks,
)
from cemkit.formulation.problem import INF, PeriodProblem
from cemkit.formulation.state import CarriedState
from cemkit.ingest.scenario import apply_scenario_overrides
from cemkit.ingest.weeks import sample_weeks


def planning_blocks(system: SystemData, configuration: Configuration, unit_commitment: bool | None = None):
    """Modelled hours implied by a configuration's week setting."""
    uc = configuration.unit_commitment if unit_commitment is None else unit_commitment
    weeks = None if configuration.sampled_weeks is None else sample_weeks(system, configuration.sampled_weeks)
    return time_blocks(system, weeks, compress_days=not uc)


def sunk_charges(system: SystemData, carried: CarriedState, horizon=None) -> dict[str, float]:
    """Annual capital charges of all earlier builds (generation, storage, corridors)."""
    horizon = horizon or system.horizon
    capex = 0.0
    for b in carried.builds:
        c = system.cluster(b.cluster)
        a_p, a_e = annuity_per_mw(system, c, horizon.period(b.period).representative_year)
        capex += a_p * b.power + a_e * b.energy
    tx = sum(system_corridor(system, k).effective_cost * mw for k, _, mw in carried.corridor_builds)
    out = {}
    if capex:
        out["capex"] = capex
    if tx:
        out["transmission"] = tx
    return out


def system_corridor(system: SystemData, kid: str):
    for k in system.corridors:
        if k.id == kid:
            return k
    raise KeyError(kid)


def build_period_problem(
    system: SystemData,
    scenario: Scenario,
    configuration: Configuration,
    period: Period,
    carried: CarriedState | None = None,
    *,
    blocks=None,
    fixed: FixedCapacity | None = None,
    unit_commitment: bool | None = None,
    weight: float | None = None,
) -> PeriodProblem:
    """LP for one period.

    ``carried`` is the stock entering the period, already aged to it; it
    defaults to the system's initial stock aged to ``period``. With ``fixed``
    every capacity is frozen and only dispatch is optimized.
    """
    system = apply_scenario_overrides(system, scenario)
    uc = configuration.unit_commitment if unit_commitment is None else unit_commitment
    if blocks is None:
        blocks = planning_blocks(system, configuration, uc)
    if carried is None and fixed is None:
        carried = CarriedState.initial(system).aged(
            system, period.representative_year, configuration.retirement_mode == "age_based"
        )
    if weight is None:
        weight = period_discount_weight(period, system.horizon, "myopic")
    ctx = PeriodContext(system, scenario, configuration, period, weight, blocks, unit_commitment=uc)
    problem = PeriodProblem(f"{scenario.name}/{configuration.name}/{period.label}")
    add_retirement_variables(problem, ctx, carried, fixed)
    add_capacity_costs(problem, ctx)
    if fixed is None:
        for comp, v in sorted(sunk_charges(system, carried).items()):
            ctx.offsets.append((comp, v))
    add_operations(problem, ctx, expandable_tx=fixed is None)
    assemble_objective(problem, [ctx])
    problem.meta.update(contexts=[ctx], system=system, mode="fixed" if fixed is not None else "myopic")
    return problem


def build_foresight_problem(
    system: SystemData,
    scenario: Scenario,
    configuration: Configuration,
    *,
    blocks=None,
) -> PeriodProblem:
    """All periods in one LP linked by capacity carry-forward, with an NPV objective."""
    system = apply_scenario_overrides(system, scenario)
    if blocks is None:
        blocks = planning_blocks(system, configuration)
    horizon = system.horizon
    economic = configuration.retirement_mode == "economic"
    problem = PeriodProblem(f"{scenario.name}/{configuration.name}/foresight")
    init = CarriedState.initial(system)
    ctxs = []
    builds = defaultdict(list)  # cluster -> [(period idx, build var, energy build var)]
    tx_builds = defaultdict(list)  # corridor -> [build var]
    for p, period in enumerate(horizon.periods):
        label, rep = period.label, period.representative_year
        w = period_discount_weight(period, horizon, "foresight")
        ctx = PeriodContext(system, scenario, configuration, period, w, blocks,
                            unit_commitment=configuration.unit_commitment)
        aged = init.aged(system, rep, age_generators=not economic)
        for c in system.clusters:
            b = be = None
            if c.new_build_allowed and c.max_new_capacity > 0:
                b = problem.add_var("build", (c.id, label), 0.0, c.max_new_capacity)
                ctx.build[c.id] = b
                if c.is_storage and c.storage.duration_fixed_hours is None:
                    be = problem.add_var("energy_build", (c.id, label))
                    ctx.energy_build[c.id] = be
                builds[c.id].append((p, b, be))
            live = [(q, bb, ee) for q, bb, ee in builds[c.id]
                    if (economic and not c.is_storage)
                    or horizon.periods[q].representative_year + c.lifetime_years > rep]
            coefs, const = {}, aged.installed(c.id)
            if economic and not c.is_storage and (const > 0 or p > 0):
                prev = ctxs[-1].cap[c.id] if p else None
                if p == 0 or not (prev.fixed and prev.value == 0):
                    r = problem.add_var("retain", (c.id, label), 0.0, const if p == 0 else INF)
                    ctx.retain[c.id] = r
                    if p > 0:
                        pr = {r: 1.0}
                        if prev.fixed:
                            rhs = prev.value
                        else:
                            pr[prev.index] = -1.0
                            rhs = 0.0
                        problem.add_row("retain_le_prev", (c.id, label), pr, "<=", rhs)
                    coefs[r] = -1.0
                    const = 0.0
                    live = [(q, bb, ee) for q, bb, ee in live if q == p]
            for _, bb, _ in live:
                coefs[bb] = coefs.get(bb, 0.0) - 1.0
            if coefs:
                k = problem.add_var("cap", (c.id, label))
                coefs[k] = 1.0
                problem.add_row("cap_def", (c.id, label), coefs, "=", const)
                ctx.cap[c.id] = CapRef(index=k)
            else:
                ctx.cap[c.id] = CapRef(value=const)
            if c.is_storage:
                _foresight_energy(problem, ctx, c, aged.energy(c.id), live)
        last = p == len(horizon.periods) - 1
        for c in system.clusters:
            if last and c.new_build_allowed and c.max_new_capacity < INF and len(builds[c.id]) > 1:
                problem.add_row("max_new", (c.id, label), {bb: 1.0 for _, bb, _ in builds[c.id]},
                                "<=", c.max_new_capacity)
        _foresight_corridors(problem, ctx, scenario, init, tx_builds, p)
        refs = {cid: [(bb, horizon.periods[q].representative_year, ee) for q, bb, ee in items]
                for cid, items in builds.items() if items}
        add_capacity_costs(problem, ctx, build_refs=refs)
        for kid, xs in tx_builds.items():
            cost = system_corridor(system, kid).effective_cost
            if cost:
                for x in xs:
                    ctx.cost("transmission", x, cost)
        add_operations(problem, ctx, expandable_tx=False)
        ctxs.append(ctx)
    assemble_objective(problem, ctxs)
    problem.meta.update(contexts=ctxs, system=system, mode="foresight")
    return problem


def _foresight_energy(problem, ctx, c, base_energy, live):
    label, st = ctx.label, c.storage
    p = ctx.cap[c.id]
    if st.duration_fixed_hours is not None:
        if p.fixed:
            ctx.energy_cap[c.id] = CapRef(value=st.duration_fixed_hours * p.value)
        else:
            e = problem.add_var("energy_cap", (c.id, label))
            problem.add_row("duration", (c.id, label), {e: 1.0, p.index: -st.duration_fixed_hours}, "=", 0.0)
            ctx.energy_cap[c.id] = CapRef(index=e)
        return
    coefs = {ee: -1.0 for _, _, ee in live if ee is not None}
    if coefs:
        e = problem.add_var("energy_cap", (c.id, label))
        coefs[e] = 1.0
        problem.add_row("energy_def", (c.id, label), coefs, "=", base_energy)
        ctx.energy_cap[c.id] = CapRef(index=e)
    else:
        ctx.energy_cap[c.id] = CapRef(value=base_energy)


def _foresight_corridors(problem, ctx, scenario, init, tx_builds, p):
    """Cumulative corridor capacity with a linear form of the per-period allowance.

    The allowance max(f x start capacity, floor) is not concave in earlier
    builds, so it is relaxed to max(floor - f x E0, 0) + f x start capacity,
    which coincides with it in the first period and never cuts off a myopic path.
    """
    f = scenario.transmission_expansion_limit
    floor = scenario.transmission_floor_mw
    label = ctx.label
    for k in ctx.system.corridors:
        e0 = init.corridor_capacity[k.id]
        if f == 0:
            ctx.corridor_cap[k.id] = CapRef(value=e0)
            continue
        ub = INF if f is None else max(f * e0, floor)
        x = problem.add_var("tx_build", (k.id, label), 0.0, ub)
        if f is not None and p > 0:
            coefs = {x: 1.0}
            for prev in tx_builds[k.id]:
                coefs[prev] = -f
            problem.add_row("tx_limit", (k.id, label), coefs, "<=", max(floor - f * e0, 0.0) + f * e0)
        tx_builds[k.id].append(x)
        ctx.corridor_build[k.id] = x
        cap = problem.add_var("tx_cap", (k.id, label))
        coefs = {cap: 1.0}
        for xx in tx_builds[k.id]:
            coefs[xx] = -1.0
        problem.add_row("tx_cap_def", (k.id, label), coefs, "=", e0)
        ctx.corridor_cap[k.id] = CapRef(index=cap)


# -- reading solutions -----------------------------------------------------------

@dataclass(frozen=True)
class PeriodReadout:
    """Plan and dispatch quantities of one period, annualized."""

    label: str
    capacity: dict  # cluster -> MW available
    energy_capacity: dict  # storage cluster -> MWh
    corridor_capacity: dict
    build: dict
    energy_build: dict
    retained: dict  # economic mode only
    corridor_build: dict
    generation: dict  # cluster -> MWh/yr (storage: discharge)
    charge: dict
    unserved: dict  # zone -> MWh/yr
    emissions: float  # tCO2/yr, from the cap-row expression
    excess: dict  # cap name -> tCO2/yr
    flows: dict  # corridor -> (forward, reverse) MWh/yr
    carbon_price: dict  # cap name -> $/t (minus the cap-row dual), when duals exist
    costs: dict  # component -> annual $


def _val(x, ref: CapRef) -> float:
    return float(ref.value) if ref.fixed else float(x[ref.index])


def read_period(problem: PeriodProblem, ctx: PeriodContext, x: np.ndarray, duals=None) -> PeriodReadout:
    w = ctx.hour_weight
    annual = lambda idx: float(w @ x[idx])
    cols, vals = emission_entries(ctx)
    costs = problem.cost_breakdown(x).get(ctx.label, {})
    return PeriodReadout(
        label=ctx.label,
        capacity={cid: _val(x, r) for cid, r in ctx.cap.items()},
        energy_capacity={cid: _val(x, r) for cid, r in ctx.energy_cap.items()},
        corridor_capacity={kid: _val(x, r) for kid, r in ctx.corridor_cap.items()},
        build={cid: float(x[i]) for cid, i in ctx.build.items()},
        energy_build={cid: float(x[i]) for cid, i in ctx.energy_build.items()},
        retained={cid: float(x[i]) for cid, i in ctx.retain.items()},
        corridor_build={kid: float(x[i]) for kid, i in ctx.corridor_build.items()},
        generation={**{cid: annual(g) for cid, g in ctx.gen.items()},
                    **{cid: annual(d) for cid, d in ctx.discharge.items()}},
        charge={cid: annual(c) for cid, c in ctx.charge.items()},
        unserved={z: annual(u) for z, u in ctx.unserved.items()},
        emissions=float(vals @ x[cols]) if len(cols) else 0.0,
        excess={name: float(x[i]) for name, i in ctx.excess.items()},
        flows={kid: (annual(f), annual(r)) for kid, (f, r) in ctx.flow.items()},
        carbon_price={} if duals is None else {name: -float(duals[i]) for name, i in ctx.cap_rows.items()},
        costs={k: float(v) for k, v in sorted(costs.items())},
    )
