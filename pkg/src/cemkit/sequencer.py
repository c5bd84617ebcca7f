"""Multi-period planning runs and the frozen-plan operational simulation."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from cemkit import __version__
from cemkit.domain import Configuration, Period, Scenario, SystemData
from cemkit.errors import InfeasibleError, SolverError
from cemkit.finance import period_discount_weight
from cemkit.formulation import (
    CarriedState,
    FixedCapacity,
    PeriodReadout,
    build_foresight_problem,
    build_period_problem,
    planning_blocks,
    read_period,
    sunk_charges,
    time_blocks,
)
from cemkit.formulation.state import BuildRecord
from cemkit.ingest.scenario import (
    apply_scenario_overrides,
    canonical_json,
    configuration_to_json,
    scenario_hash,
    scenario_to_json,
)
from cemkit.ingest.weeks import SAMPLING_SEED
from cemkit.solver import SolveSettings, infeasible_rows, solve

PLAN_TOL = 1e-6  # MW; smaller build or retirement decisions are solver noise

OPERATIONAL_CONFIGURATION = Configuration(
    "operational_simulation", unit_commitment=True, operational_sim=True
)


@dataclass(frozen=True)
class PeriodRecord:
    label: str
    readout: PeriodReadout
    objective: float  # weighted contribution of this period to the run objective
    annual_cost: float  # $/yr, every component including sunk charges
    retired: dict  # cumulative MW retired by cluster at this period
    emissions_recomputed: float  # tCO2/yr from the independent accounting pass


@dataclass(frozen=True)
class PlanTrajectory:
    scenario: str
    configuration: str
    sequencing: str
    periods: tuple
    objective: float
    builds: tuple = ()  # BuildRecord
    corridor_builds: tuple = ()
    backend: str = ""

    def period(self, label: str) -> PeriodRecord:
        for p in self.periods:
            if p.label == label:
                return p
        raise KeyError(f"plan has no period {label!r}")

    @property
    def labels(self) -> list[str]:
        return [p.label for p in self.periods]


@dataclass(frozen=True)
class OperationalResult:
    period: str
    costs: dict  # component -> annual $
    total_cost: float
    unserved_mwh: float
    emissions: float
    zones: dict = field(default_factory=dict)  # zone -> {"unserved_mwh", "generation_mwh", "demand_mwh"}
    generation: dict = field(default_factory=dict)  # cluster -> MWh/yr
    carbon_price: dict = field(default_factory=dict)
    flows: dict = field(default_factory=dict)  # corridor -> (forward, reverse) MWh/yr


# -- helpers -----------------------------------------------------------------------

def recompute_emissions(system: SystemData, generation: dict) -> float:
    """tCO2/yr from annual generation using heat rates and fuel factors directly."""
    total = 0.0
    for c in system.generators:
        mwh = generation.get(c.id, 0.0)
        if not mwh:
            continue
        tech = c.tech
        if tech.emission_rate is not None:
            factor = tech.emission_rate
        elif tech.fuel is not None:
            factor = system.fuels[tech.fuel].emission_factor
        else:
            factor = 0.0
        hr = tech.heat_rate if c.heat_rate is None else c.heat_rate
        total += mwh * hr * factor * (1.0 - tech.capture_rate)
    return total


def _solve_or_raise(problem, settings, label):
    sol = solve(problem, settings)
    if sol.status == "infeasible":
        rows = infeasible_rows(problem, lambda q: solve(q, settings))
        raise InfeasibleError(f"period {label} is infeasible", period=label, rows=rows)
    if sol.status != "optimal":
        raise SolverError(f"period {label}: solver status {sol.status}", trace=sol.trace)
    return sol


def _record(problem, ctx, sol, retired, system) -> PeriodRecord:
    r = read_period(problem, ctx, sol.x, sol.duals)
    return PeriodRecord(
        label=ctx.label,
        readout=r,
        objective=float(sum(v for v in problem.cost_breakdown(sol.x, weighted=True).get(ctx.label, {}).values())),
        annual_cost=float(sum(r.costs.values())),
        retired=dict(sorted(retired.items())),
        emissions_recomputed=recompute_emissions(system, r.generation),
    )


def _clean(values: dict) -> dict:
    return {k: v for k, v in sorted(values.items()) if v > PLAN_TOL}


def carry_forward_state(
    prev: CarriedState,
    readout: PeriodReadout,
    configuration: Configuration,
    system: SystemData,
    period: Period,
    next_period: Period | None = None,
) -> CarriedState:
    """Stock entering ``next_period`` after applying ``period``'s decisions.

    Economic mode trims each cluster to its retained level; new builds join as
    vintages dated to the period's representative year; corridor expansions
    accrue permanently; then the stock is aged to the next period.
    """
    state = prev
    if configuration.retirement_mode == "economic":
        for cid, r in sorted(readout.retained.items()):
            if prev.installed(cid) - r > PLAN_TOL:
                state = state.retain(cid, r)
    energy = {}
    for cid, mw in readout.build.items():
        c = system.cluster(cid)
        if c.is_storage and c.storage.duration_fixed_hours is not None:
            energy[cid] = mw * c.storage.duration_fixed_hours
        elif cid in readout.energy_build:
            energy[cid] = readout.energy_build[cid]
    state = state.with_builds(period.label, period.representative_year, _clean(readout.build), _clean(energy))
    state = state.with_corridor_builds(period.label, _clean(readout.corridor_build))
    if next_period is not None:
        state = state.aged(system, next_period.representative_year, configuration.retirement_mode == "age_based")
    return state


# -- runs --------------------------------------------------------------------------

def run_myopic(system: SystemData, scenario: Scenario, configuration: Configuration,
               settings: SolveSettings | None = None, blocks=None) -> PlanTrajectory:
    """Solve each period in turn, seeing only decisions already made."""
    settings = settings or SolveSettings()
    system = apply_scenario_overrides(system, scenario)
    if blocks is None:
        blocks = planning_blocks(system, configuration)
    periods = system.horizon.periods
    age = configuration.retirement_mode == "age_based"
    state = CarriedState.initial(system).aged(system, periods[0].representative_year, age)
    records = []
    for i, period in enumerate(periods):
        problem = build_period_problem(system, scenario, configuration, period, state, blocks=blocks)
        sol = _solve_or_raise(problem, settings, period.label)
        ctx = problem.meta["contexts"][0]
        readout = read_period(problem, ctx, sol.x, sol.duals)
        nxt = periods[i + 1] if i + 1 < len(periods) else None
        after = carry_forward_state(state, readout, configuration, system, period, None)
        records.append(_record(problem, ctx, sol, after.retired, system))
        state = carry_forward_state(state, readout, configuration, system, period, nxt)
    return PlanTrajectory(
        scenario=scenario.name,
        configuration=configuration.name,
        sequencing="myopic",
        periods=tuple(records),
        objective=float(sum(r.objective for r in records)),
        builds=state.builds,
        corridor_builds=state.corridor_builds,
        backend=settings.resolved_backend,
    )


def run_foresight(system: SystemData, scenario: Scenario, configuration: Configuration,
                  settings: SolveSettings | None = None, blocks=None) -> PlanTrajectory:
    """One joint solve over the horizon with the discounted objective."""
    settings = settings or SolveSettings()
    system = apply_scenario_overrides(system, scenario)
    problem = build_foresight_problem(system, scenario, configuration, blocks=blocks)
    sol = _solve_or_raise(problem, settings, "foresight")
    records, builds, tx = [], [], []
    retired: dict = {}
    init = CarriedState.initial(system)
    age = configuration.retirement_mode == "age_based"
    for ctx in problem.meta["contexts"]:
        r = read_period(problem, ctx, sol.x, sol.duals)
        for cid, mw in _clean(r.build).items():
            c = system.cluster(cid)
            e = r.energy_build.get(cid, 0.0)
            if c.is_storage and c.storage.duration_fixed_hours is not None:
                e = mw * c.storage.duration_fixed_hours
            builds.append(BuildRecord(cid, ctx.label, mw, e))
        tx.extend((k, ctx.label, mw) for k, mw in _clean(r.corridor_build).items())
        retired = _retired_so_far(system, init, ctx.period, r, age, builds)
        records.append(_record(problem, ctx, sol, retired, system))
    return PlanTrajectory(
        scenario=scenario.name,
        configuration=configuration.name,
        sequencing="foresight",
        periods=tuple(records),
        objective=float(sol.objective),
        builds=tuple(builds),
        corridor_builds=tuple(tx),
        backend=settings.resolved_backend,
    )


def _retired_so_far(system, init, period, readout, age, builds) -> dict:
    """Cumulative retirements implied by a period's capacity: everything built minus what is left."""
    out = {}
    for c in system.clusters:
        ever = init.installed(c.id) + sum(b.power for b in builds if b.cluster == c.id)
        left = readout.capacity.get(c.id, 0.0)
        gone = ever - left
        if gone > PLAN_TOL:
            out[c.id] = gone
    return out


def run_plan(system: SystemData, scenario: Scenario, configuration: Configuration,
             settings: SolveSettings | None = None) -> PlanTrajectory:
    runner = run_foresight if configuration.sequencing == "foresight" else run_myopic
    return runner(system, scenario, configuration, settings)


def _plan_task(args):
    return run_plan(*args)


def run_matrix(system: SystemData, pairs, settings: SolveSettings | None = None, workers: int = 1) -> list:
    """Plans for independent (scenario, configuration) pairs, in order, up to ``workers`` at a time."""
    tasks = [(system, sc, cfg, settings) for sc, cfg in pairs]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_plan_task, tasks))
    return [_plan_task(t) for t in tasks]


def trajectory_npv(trajectory: PlanTrajectory, system: SystemData) -> float:
    """A trajectory's annual costs discounted with the foresight period weights."""
    h = system.horizon
    return float(sum(period_discount_weight(h.period(p.label), h, "foresight") * p.annual_cost
                     for p in trajectory.periods))


def plan_fixed_capacity(system: SystemData, plan: PlanTrajectory, label: str) -> FixedCapacity:
    rec = plan.period(label)
    idx = plan.labels.index(label)
    upto = set(plan.labels[: idx + 1])
    ledger = CarriedState(
        builds=tuple(b for b in plan.builds if b.period in upto),
        corridor_builds=tuple(t for t in plan.corridor_builds if t[1] in upto),
    )
    r = rec.readout
    def snap(d):
        return {k: (v if abs(v) > PLAN_TOL else 0.0) for k, v in d.items()}

    return FixedCapacity(
        power=snap(r.capacity),
        energy=snap(r.energy_capacity),
        corridor=snap(r.corridor_capacity),
        sunk=sunk_charges(system, ledger),
    )


def run_operational_sim(system: SystemData, scenario: Scenario, plan: PlanTrajectory, period: str,
                        settings: SolveSettings | None = None) -> OperationalResult:
    """Dispatch a frozen plan over all weeks with commitment limits on."""
    settings = settings or SolveSettings()
    system = apply_scenario_overrides(system, scenario)
    try:
        per = system.horizon.period(period)
    except KeyError:
        raise KeyError(f"period {period!r} is not in the horizon") from None
    fixed = plan_fixed_capacity(system, plan, period)
    blocks = time_blocks(system, None, compress_days=False)
    problem = build_period_problem(system, scenario, OPERATIONAL_CONFIGURATION, per, fixed=fixed,
                                   blocks=blocks, unit_commitment=True, weight=1.0)
    sol = _solve_or_raise(problem, settings, period)
    ctx = problem.meta["contexts"][0]
    r = read_period(problem, ctx, sol.x, sol.duals)
    zones = {}
    for z in system.zone_ids:
        gen = sum(v for cid, v in r.generation.items() if system.cluster(cid).zone == z)
        zones[z] = {
            "demand_mwh": float(ctx.hour_weight @ ctx.demand(z)),
            "generation_mwh": float(gen),
            "unserved_mwh": r.unserved[z],
        }
    costs = dict(r.costs)
    return OperationalResult(
        period=period,
        costs=costs,
        total_cost=float(sum(costs.values())),
        unserved_mwh=float(sum(r.unserved.values())),
        emissions=r.emissions,
        zones=zones,
        generation=dict(sorted(r.generation.items())),
        carbon_price=dict(r.carbon_price),
        flows=dict(r.flows),
    )


def _sim_task(args):
    system, scenario, plan, label, settings = args
    return run_operational_sim(system, scenario, plan, label, settings)


def simulate_plan(system: SystemData, scenario: Scenario, plan: PlanTrajectory,
                  settings: SolveSettings | None = None, workers: int = 1) -> dict:
    """Operational simulation of every period of a plan, optionally in parallel."""
    settings = settings or SolveSettings()
    tasks = [(system, scenario, plan, label, settings) for label in plan.labels]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sim_task, tasks))
    else:
        results = [_sim_task(t) for t in tasks]
    return {r.period: r for r in results}


def compute_npv_summary(annual_costs: dict, horizon, discount_rate: float | None = None) -> dict:
    """Discount per-period annual costs (numbers or component dicts) and sum.

    Returns ``{"npv": total, "by_period": {...}, "by_component": {...}}``.
    """
    by_period, by_comp = {}, {}
    for label, cost in annual_costs.items():
        w = period_discount_weight(horizon.period(label), horizon, "foresight", discount_rate)
        if isinstance(cost, OperationalResult):
            cost = cost.costs
        if isinstance(cost, dict):
            for comp, v in cost.items():
                by_comp[comp] = by_comp.get(comp, 0.0) + w * v
            cost = sum(cost.values())
        by_period[label] = w * float(cost)
    return {
        "npv": float(sum(by_period.values())),
        "by_period": by_period,
        "by_component": dict(sorted(by_comp.items())),
    }


# -- results directories -----------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _trajectory_rows(system: SystemData, periods):
    for label, r, retired in periods:
        for c in system.clusters:
            kind = "storage" if c.is_storage else "generator"
            yield (label, kind, c.id, c.zone, c.tech.name, float(r.capacity.get(c.id, 0.0)),
                   float(r.energy_capacity[c.id]) if c.id in r.energy_capacity else None,
                   float(r.build.get(c.id, 0.0)), float(retired.get(c.id, 0.0)),
                   float(r.generation.get(c.id, 0.0)))
        for k in system.corridors:
            yield (label, "corridor", k.id, f"{k.zone_from}-{k.zone_to}", "transmission",
                   float(r.corridor_capacity[k.id]), None, float(r.corridor_build.get(k.id, 0.0)), 0.0,
                   float(sum(r.flows[k.id])))


TRAJECTORY_HEADER = ("period", "kind", "id", "zone", "tech", "capacity_mw", "energy_mwh", "build_mw",
                     "retired_mw", "generation_mwh")


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def directory_hashes(directory) -> dict:
    root = Path(directory)
    return {str(p.relative_to(root)): file_sha256(p) for p in sorted(root.rglob("*")) if p.is_file()}


def build_manifest(command: str, scenario: Scenario, configuration: Configuration | None,
                   settings: SolveSettings, workers: int = 1, inputs: dict | None = None) -> dict:
    return {
        "command": command,
        "tool_version": __version__,
        "scenario": scenario_to_json(scenario),
        "scenario_hash": scenario_hash(scenario),
        "configuration": None if configuration is None else configuration_to_json(configuration),
        "backend": settings.resolved_backend,
        "method": settings.method,
        "workers": workers,
        "seeds": {"week_sampling": SAMPLING_SEED, "solver": 0},
        "inputs": inputs or {},
    }


def write_plan_results(out, system: SystemData, trajectory: PlanTrajectory, manifest: dict) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "manifest.json", manifest)
    sysx = apply_scenario_overrides(system, _scenario_from_manifest(manifest))
    _write_csv(out / "trajectory.csv", TRAJECTORY_HEADER,
               _trajectory_rows(sysx, [(p.label, p.readout, p.retired) for p in trajectory.periods]))
    _write_csv(out / "dispatch_summary.csv", ("period", "zone", "tech", "metric", "mwh"),
               _dispatch_rows(sysx, [(p.label, p.readout) for p in trajectory.periods]))
    _write_csv(out / "emissions.csv", ("period", "emissions_t", "recomputed_t", "excess_t", "carbon_price"),
               [(p.label, p.readout.emissions, p.emissions_recomputed, float(sum(p.readout.excess.values())),
                 _first(p.readout.carbon_price)) for p in trajectory.periods])
    npv = trajectory_npv(trajectory, sysx)
    costs = {
        "kind": "plan",
        "sequencing": trajectory.sequencing,
        "objective": trajectory.objective,
        "npv": npv,
        "periods": {p.label: {"components": p.readout.costs, "total": p.annual_cost, "weighted": p.objective}
                    for p in trajectory.periods},
        "builds": [[b.cluster, b.period, b.power, b.energy] for b in trajectory.builds],
        "corridor_builds": [list(t) for t in trajectory.corridor_builds],
    }
    _write_json(out / "costs.json", costs)
    return out


def write_simulation_results(out, system: SystemData, plan: PlanTrajectory, results: dict, manifest: dict) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "manifest.json", manifest)
    sysx = apply_scenario_overrides(system, _scenario_from_manifest(manifest))
    dispatched = [(p.label, replace(p.readout, generation=results[p.label].generation,
                                    flows=results[p.label].flows), p.retired) for p in plan.periods]
    _write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, _trajectory_rows(sysx, dispatched))
    rows = []
    for label in plan.labels:
        res = results[label]
        for z, d in sorted(res.zones.items()):
            rows.append((label, z, "", "demand", d["demand_mwh"]))
            rows.append((label, z, "", "unserved", d["unserved_mwh"]))
        for cid, mwh in res.generation.items():
            c = sysx.cluster(cid)
            rows.append((label, c.zone, c.tech.name, f"generation:{cid}", mwh))
    _write_csv(out / "dispatch_summary.csv", ("period", "zone", "tech", "metric", "mwh"), rows)
    _write_csv(out / "emissions.csv", ("period", "emissions_t", "recomputed_t", "excess_t", "carbon_price"),
               [(l, results[l].emissions, recompute_emissions(sysx, results[l].generation),
                 float(results[l].costs.get("buyout", 0.0) / _buyout_price(sysx) if _buyout_price(sysx) else 0.0),
                 _first(results[l].carbon_price)) for l in plan.labels])
    npv = compute_npv_summary({l: results[l].costs for l in plan.labels}, sysx.horizon)
    costs = {
        "kind": "simulation",
        "npv": npv["npv"],
        "npv_by_component": npv["by_component"],
        "periods": {l: {"components": results[l].costs, "total": results[l].total_cost,
                        "unserved_mwh": results[l].unserved_mwh} for l in plan.labels},
    }
    _write_json(out / "costs.json", costs)
    return out


def _buyout_price(system):
    cap = system.policies.carbon_cap
    return cap.buyout_price if cap is not None else 0.0


def _first(d: dict):
    return d[sorted(d)[0]] if d else None


def _dispatch_rows(system, periods):
    for label, r in periods:
        for z in system.zone_ids:
            yield (label, z, "", "unserved", r.unserved[z])
        for c in system.clusters:
            yield (label, c.zone, c.tech.name, f"generation:{c.id}", float(r.generation.get(c.id, 0.0)))
            if c.is_storage:
                yield (label, c.zone, c.tech.name, f"charge:{c.id}", float(r.charge.get(c.id, 0.0)))


def _scenario_from_manifest(manifest):
    from cemkit.ingest.scenario import scenario_from_json

    return scenario_from_json(manifest["scenario"])


def read_plan_results(directory, system: SystemData) -> PlanTrajectory:
    """Rebuild the plan a results directory describes (capacities and builds)."""
    directory = Path(directory)
    costs = json.loads((directory / "costs.json").read_text(encoding="utf-8"))
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    if costs.get("kind") != "plan":
        raise ValueError(f"{directory} is not a plan results directory")
    per = {}
    with open(directory / "trajectory.csv", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            d = per.setdefault(row["period"], {"capacity": {}, "energy": {}, "corridor": {}, "build": {}})
            if row["kind"] == "corridor":
                d["corridor"][row["id"]] = float(row["capacity_mw"])
            else:
                d["capacity"][row["id"]] = float(row["capacity_mw"])
                if row["energy_mwh"]:
                    d["energy"][row["id"]] = float(row["energy_mwh"])
    records = []
    for label in costs["periods"]:
        d = per[label]
        r = PeriodReadout(label, d["capacity"], d["energy"], d["corridor"], {}, {}, {}, {}, {}, {}, {}, 0.0, {},
                          {}, {}, costs["periods"][label]["components"])
        records.append(PeriodRecord(label, r, costs["periods"][label]["weighted"],
                                    costs["periods"][label]["total"], {}, 0.0))
    return PlanTrajectory(
        scenario=manifest["scenario"]["name"],
        configuration=(manifest.get("configuration") or {}).get("name", ""),
        sequencing=costs["sequencing"],
        periods=tuple(records),
        objective=costs["objective"],
        builds=tuple(BuildRecord(c, p, pw, e) for c, p, pw, e in costs["builds"]),
        corridor_builds=tuple((k, p, mw) for k, p, mw in costs["corridor_builds"]),
    )


def canonical_manifest_hash(manifest: dict) -> str:
    return hashlib.sha256(canonical_json(manifest).encode()).hexdigest()
