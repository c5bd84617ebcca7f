"""Constraint blocks of the expansion LP.

Each adder works on a ``PeriodContext`` that already holds the modelled hours
and the capacity handles for one period; adders register annual cost terms on
the context and ``assemble_objective`` applies the period weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cemkit.domain import Configuration, Period, ResourceCluster, Scenario, SystemData
from cemkit.errors import ConfigurationError, SchemaError
from cemkit.finance import capital_recovery_factor, levelize_ptc
from cemkit.formulation.problem import INF, PeriodProblem
from cemkit.formulation.state import CarriedState


# -- time structure ------------------------------------------------------------

@dataclass(frozen=True)
class TimeBlock:
    """A run of modelled hours standing in for ``weight`` / ``repeats`` calendar weeks."""

    week: int  # 0-based source week
    hours: np.ndarray  # indices into the hourly series
    weight: float  # multiplies a sum over the block into an annual total
    repeats: int = 1  # copies of the block inside one week (7 for a compressed day)
    members: tuple = ()  # all source weeks merged into this block


def _week_signature(system: SystemData, week: int) -> tuple[np.ndarray, tuple]:
    H = system.hours_per_week
    sl = slice(week * H, (week + 1) * H)
    rows = [z.demand[sl] for z in system.zones]
    rows += [c.profile[sl] for c in system.clusters if c.profile is not None]
    hydro = tuple(system.week_hydro_budget(cid, week) for cid in sorted(system.hydro_budgets))
    return np.vstack(rows), hydro


def time_blocks(system: SystemData, weeks=None, compress_days: bool = False) -> list[TimeBlock]:
    """Modelled hours for a week selection (``None`` means every week, weight 1).

    Weeks with identical hourly data and hydro budgets are merged exactly,
    summing their weights. With ``compress_days`` a week whose data repeat
    every 24 hours is replaced by one cyclic day; without ramp or commitment
    coupling, averaging the seven day-shifts of any weekly solution gives a
    day-periodic one of equal cost, so the optimum is unchanged.
    """
    H = system.hours_per_week
    pairs = [(w, 1.0) for w in range(system.n_weeks)] if weeks is None else list(weeks.pairs())
    if not pairs:
        raise ConfigurationError("week selection is empty")
    groups: dict[bytes, list] = {}
    order = []
    for w, wt in pairs:
        data, hydro = _week_signature(system, w)
        key = data.tobytes() + repr(hydro).encode()
        if key not in groups:
            groups[key] = [w, 0.0, data, []]
            order.append(key)
        groups[key][1] += wt
        groups[key][3].append(w)
    out = []
    for key in order:
        w, wt, data, members = groups[key]
        hours = np.arange(w * H, (w + 1) * H)
        repeats = 1
        if compress_days and H % 24 == 0 and np.array_equal(np.tile(data[:, :24], H // 24), data):
            hours, repeats = hours[:24], H // 24
        out.append(TimeBlock(w, hours, wt * repeats * system.annual_scale, repeats, tuple(members)))
    return out


# -- capacity handles ----------------------------------------------------------

@dataclass(frozen=True)
class CapRef:
    """Either a fixed capacity value or the index of a capacity variable."""

    value: float | None = None
    index: int | None = None

    @property
    def fixed(self) -> bool:
        return self.index is None


@dataclass(frozen=True)
class FixedCapacity:
    """Frozen plan for dispatch-only solves."""

    power: dict
    energy: dict
    corridor: dict
    sunk: dict = field(default_factory=dict)  # component -> annual $ charged as a constant


@dataclass
class PeriodContext:
    system: SystemData
    scenario: Scenario
    configuration: Configuration
    period: Period
    weight: float
    blocks: list
    unit_commitment: bool = False
    cap: dict = field(default_factory=dict)
    energy_cap: dict = field(default_factory=dict)
    corridor_cap: dict = field(default_factory=dict)
    build: dict = field(default_factory=dict)
    energy_build: dict = field(default_factory=dict)
    retain: dict = field(default_factory=dict)
    corridor_build: dict = field(default_factory=dict)
    gen: dict = field(default_factory=dict)
    charge: dict = field(default_factory=dict)
    discharge: dict = field(default_factory=dict)
    soc: dict = field(default_factory=dict)
    commit: dict = field(default_factory=dict)
    startup: dict = field(default_factory=dict)
    shutdown: dict = field(default_factory=dict)
    flow: dict = field(default_factory=dict)  # corridor -> (forward, reverse)
    unserved: dict = field(default_factory=dict)
    excess: dict = field(default_factory=dict)  # cap name -> var index
    cap_rows: dict = field(default_factory=dict)
    balance_rows: np.ndarray | None = None
    costs: list = field(default_factory=list)  # (component, index, annual coef)
    offsets: list = field(default_factory=list)  # (component, annual $)

    def __post_init__(self):
        self.hours = np.concatenate([b.hours for b in self.blocks])
        self.hour_weight = np.concatenate([np.full(len(b.hours), b.weight) for b in self.blocks])
        self.block_start = np.cumsum([0] + [len(b.hours) for b in self.blocks])
        self.T = len(self.hours)

    @property
    def label(self) -> str:
        return self.period.label

    @property
    def rep_year(self) -> int:
        return self.period.representative_year

    def demand(self, zone_id: str) -> np.ndarray:
        return self.system.zone(zone_id).demand[self.hours] * self.period.demand_scale

    def prev_hour(self) -> np.ndarray:
        """Index of the previous modelled hour inside the same block, cyclic."""
        prev = np.arange(self.T) - 1
        for a, b in zip(self.block_start[:-1], self.block_start[1:]):
            prev[a] = b - 1
        return prev

    def first_hour_mask(self) -> np.ndarray:
        mask = np.zeros(self.T, dtype=bool)
        mask[self.block_start[:-1]] = True
        return mask

    def cost(self, component: str, index, coef):
        self.costs.append((component, np.atleast_1d(index), np.broadcast_to(coef, np.shape(np.atleast_1d(index)))))


def capacity_value(problem_or_x, ref: CapRef) -> float:
    """Capacity of a handle given a primal vector."""
    return ref.value if ref.fixed else float(problem_or_x[ref.index])


# -- cost coefficients ---------------------------------------------------------

def _credits(scenario_policies, kind: str, tech: str, year: int):
    return [t for t in scenario_policies.tax_credits if t.kind == kind and tech in t.techs and year <= t.through_year]


def itc_fraction(system: SystemData, cluster: ResourceCluster, year: int) -> float:
    return min(sum(t.value for t in _credits(system.policies, "itc", cluster.tech.name, year)), 0.999)


def wacc(system: SystemData, cluster: ResourceCluster) -> float:
    return system.financial.wacc_default if cluster.wacc_override is None else cluster.wacc_override


def annuity_per_mw(system: SystemData, cluster: ResourceCluster, build_year: int) -> tuple[float, float]:
    """($/MW-yr on power, $/MWh-yr on energy) for a build in ``build_year``.

    Annuities run over the asset's normal life at its cost of capital, net of
    any investment credit in force that year.
    """
    crf = capital_recovery_factor(wacc(system, cluster), cluster.lifetime_years)
    keep = 1.0 - itc_fraction(system, cluster, build_year)
    if cluster.is_storage:
        st = cluster.storage
        return st.power_capex * 1e3 * crf * keep, st.energy_capex * 1e3 * crf * keep
    return (cluster.capex_overnight + cluster.interconnect_capex) * 1e3 * crf * keep, 0.0


def ptc_per_mwh(system: SystemData, cluster: ResourceCluster, year: int) -> float:
    """Levelized production credit earned by a new-build cluster in ``year`` ($/MWh, >= 0)."""
    if cluster.existing_capacity > 0 or not cluster.new_build_allowed:
        return 0.0
    fin = system.financial
    return sum(
        levelize_ptc(t.value, fin.ptc_credit_years, fin.amortization_life, wacc(system, cluster),
                     fin.ptc_transfer_penalty, cluster.ptc_bonus)
        for t in _credits(system.policies, "ptc", cluster.tech.name, year)
    )


def sequestration_per_mwh(system: SystemData, cluster: ResourceCluster, year: int) -> float:
    cr = system.captured_rate(cluster)
    return sum(t.value * cr for t in _credits(system.policies, "sequestration", cluster.tech.name, year))


def variable_cost(system: SystemData, cluster: ResourceCluster, label: str) -> tuple[float, float]:
    """(variable O&M, fuel) in $/MWh."""
    return cluster.variable_om, system.fuel_price(cluster, label) * cluster.effective_heat_rate


def transmission_expansion_bound(existing: float, fraction: float | None, floor: float = 400.0) -> float:
    """Per-period expansion allowance of one corridor.

    ``None`` is unconstrained and 0 forbids expansion; otherwise the larger of
    ``fraction`` of start-of-period capacity and the floor.
    """
    if fraction is None:
        return INF
    if fraction < 0:
        raise ValueError("fraction must be >= 0")
    if fraction == 0:
        return 0.0
    return max(fraction * existing, floor)


# -- capacity and retirement -----------------------------------------------------

def add_retirement_variables(problem: PeriodProblem, ctx: PeriodContext, carried: CarriedState | None = None,
                             fixed: FixedCapacity | None = None):
    """Capacity handles for one period.

    ``carried`` must already be aged to this period. Age-based mode fixes the
    carried stock; economic mode makes it a retained amount in [0, carried]
    with fixed O&M charged on what is kept. New builds add on top in either mode.
    """
    system, label = ctx.system, ctx.label
    economic = ctx.configuration.retirement_mode == "economic"
    for c in system.clusters:
        if fixed is not None:
            ctx.cap[c.id] = CapRef(value=float(fixed.power.get(c.id, 0.0)))
            if c.is_storage:
                ctx.energy_cap[c.id] = CapRef(value=float(fixed.energy.get(c.id, 0.0)))
            continue
        base = carried.installed(c.id)
        room = c.max_new_capacity - carried.built(c.id) if c.new_build_allowed else 0.0
        coefs, const = {}, base
        if economic and base > 0 and not c.is_storage:
            r = problem.add_var("retain", (c.id, label), 0.0, base)
            ctx.retain[c.id] = r
            coefs[r] = -1.0
            const = 0.0
        if room > 0:
            b = problem.add_var("build", (c.id, label), 0.0, room)
            ctx.build[c.id] = b
            coefs[b] = -1.0
        if coefs:
            k = problem.add_var("cap", (c.id, label))
            coefs[k] = 1.0
            problem.add_row("cap_def", (c.id, label), coefs, "=", const)
            ctx.cap[c.id] = CapRef(index=k)
        else:
            ctx.cap[c.id] = CapRef(value=base)
        if c.is_storage:
            _storage_energy_capacity(problem, ctx, c, carried.energy(c.id))
    for k in system.corridors:
        if fixed is not None:
            ctx.corridor_cap[k.id] = CapRef(value=float(fixed.corridor[k.id]))
        else:
            ctx.corridor_cap[k.id] = CapRef(value=float(carried.corridor_capacity[k.id]))
    if fixed is not None:
        for comp, v in sorted(fixed.sunk.items()):
            ctx.offsets.append((comp, v))


def _storage_energy_capacity(problem, ctx, c, base_energy):
    label, st = ctx.label, c.storage
    p = ctx.cap[c.id]
    if st.duration_fixed_hours is not None:
        d = st.duration_fixed_hours
        if p.fixed:
            ctx.energy_cap[c.id] = CapRef(value=d * p.value)
        else:
            e = problem.add_var("energy_cap", (c.id, label))
            problem.add_row("duration", (c.id, label), {e: 1.0, p.index: -d}, "=", 0.0)
            ctx.energy_cap[c.id] = CapRef(index=e)
        return
    if c.id in ctx.build:
        be = problem.add_var("energy_build", (c.id, label))
        e = problem.add_var("energy_cap", (c.id, label))
        problem.add_row("energy_def", (c.id, label), {e: 1.0, be: -1.0}, "=", base_energy)
        ctx.energy_build[c.id] = be
        ctx.energy_cap[c.id] = CapRef(index=e)
    else:
        ctx.energy_cap[c.id] = CapRef(value=base_energy)


def add_capacity_costs(problem: PeriodProblem, ctx: PeriodContext, build_refs=None):
    """Fixed O&M on available capacity; annuities on builds listed in ``build_refs``.

    ``build_refs`` maps cluster -> [(var index, build year)] and defaults to
    this period's own builds.
    """
    system = ctx.system
    for c in system.clusters:
        ref = ctx.cap[c.id]
        fom = c.fixed_om * 1e3
        if fom:
            if ref.fixed:
                ctx.offsets.append(("fixed_om", fom * ref.value))
            else:
                ctx.cost("fixed_om", ref.index, fom)
    if build_refs is None:
        build_refs = {cid: [(b, ctx.rep_year, ctx.energy_build.get(cid))] for cid, b in ctx.build.items()}
    for cid, items in build_refs.items():
        c = system.cluster(cid)
        for b, year, be in items:
            a_p, a_e = annuity_per_mw(system, c, year)
            if c.is_storage and c.storage.duration_fixed_hours is not None:
                a_p += a_e * c.storage.duration_fixed_hours
            if a_p:
                ctx.cost("capex", b, a_p)
            if be is not None and a_e:
                ctx.cost("capex", be, a_e)


# -- dispatch --------------------------------------------------------------------

def _cap_limited_vars(problem, ctx, kind, cid, ref: CapRef, coef: np.ndarray, row_kind):
    """Create T variables ``x_t <= coef_t * K``; bounds when K is fixed, rows otherwise."""
    T, label = ctx.T, ctx.label
    keys = [(cid, label, t) for t in range(T)]
    if ref.fixed:
        return problem.add_vars(kind, keys, 0.0, coef * ref.value)
    idx = problem.add_vars(kind, keys, 0.0, INF)
    rows = np.repeat(np.arange(T), 2)
    cols = np.column_stack([idx, np.full(T, ref.index)]).ravel()
    vals = np.column_stack([np.ones(T), -coef]).ravel()
    problem.add_rows(row_kind, keys, rows, cols, vals, "<=", 0.0)
    return idx


def build_dispatch_block(problem: PeriodProblem, ctx: PeriodContext):
    """Generation and unserved energy tied together by the zone-hour power balance.

    Storage and transmission terms join the balance rows when their blocks
    are added, so this must run before them.
    """
    if ctx.T == 0:
        raise ConfigurationError("no modelled hours")
    system, label, T = ctx.system, ctx.label, ctx.T
    zones = system.zone_ids
    zi = {z: i for i, z in enumerate(zones)}
    entries_r, entries_c, entries_v = [], [], []

    def into_balance(zone, idx, coef):
        entries_r.append(zi[zone] * T + np.arange(T))
        entries_c.append(np.asarray(idx))
        entries_v.append(np.broadcast_to(np.asarray(coef, dtype=float), (T,)).copy())

    w = ctx.hour_weight
    for c in system.generators:
        prof = c.profile[ctx.hours] if c.profile is not None else np.ones(T)
        commit = ctx.unit_commitment and c.tech.commits
        if commit:
            # the commitment block caps generation by committed MW
            ref = ctx.cap[c.id]
            ub = np.full(T, ref.value) if ref.fixed else np.full(T, INF)
            g = problem.add_vars("gen", [(c.id, label, t) for t in range(T)], 0.0, ub)
        else:
            g = _cap_limited_vars(problem, ctx, "gen", c.id, ctx.cap[c.id], prof, "gen_cap")
        ctx.gen[c.id] = g
        into_balance(c.zone, g, 1.0)
        vom, fuel = variable_cost(system, c, label)
        if vom:
            ctx.cost("variable_om", g, vom * w)
        if fuel:
            ctx.cost("fuel", g, fuel * w)
        ptc = ptc_per_mwh(system, c, ctx.rep_year)
        if ptc:
            ctx.cost("ptc", g, -ptc * w)
        seq = sequestration_per_mwh(system, c, ctx.rep_year)
        if seq:
            ctx.cost("sequestration", g, -seq * w)
    penalty = system.financial.unserved_penalty
    for z in zones:
        d = ctx.demand(z)
        u = problem.add_vars("unserved", [(z, label, t) for t in range(T)], 0.0, d)
        ctx.unserved[z] = u
        into_balance(z, u, 1.0)
        ctx.cost("unserved", u, penalty * w)
    ctx._balance_entries = (entries_r, entries_c, entries_v)
    ctx._zone_index = zi


def _finish_balance(problem: PeriodProblem, ctx: PeriodContext):
    zones = ctx.system.zone_ids
    r, c, v = ctx._balance_entries
    rhs = np.concatenate([ctx.demand(z) for z in zones])
    keys = [(z, ctx.label, t) for z in zones for t in range(ctx.T)]
    ctx.balance_rows = problem.add_rows("balance", keys, np.concatenate(r), np.concatenate(c),
                                        np.concatenate(v), "=", rhs)


def add_storage_constraints(problem: PeriodProblem, ctx: PeriodContext):
    """Charge and discharge linked through a cyclic state of charge, for every storage cluster."""
    label, T = ctx.label, ctx.T
    prev = ctx.prev_hour()
    ones = np.ones(T)
    r, c_, v = ctx._balance_entries
    zi = ctx._zone_index
    for s in ctx.system.storage:
        eta = s.storage.one_way_efficiency
        ch = _cap_limited_vars(problem, ctx, "charge", s.id, ctx.cap[s.id], ones, "charge_cap")
        dis = _cap_limited_vars(problem, ctx, "discharge", s.id, ctx.cap[s.id], ones, "discharge_cap")
        soc = _cap_limited_vars(problem, ctx, "soc", s.id, ctx.energy_cap[s.id], ones, "soc_cap")
        # soc_t - soc_{t-1} - eta*charge_t + discharge_t/eta = 0, wrapping within each block
        rows = np.repeat(np.arange(T), 4)
        cols = np.column_stack([soc, soc[prev], ch, dis]).ravel()
        vals = np.tile([1.0, -1.0, -eta, 1.0 / eta], T)
        problem.add_rows("soc_balance", [(s.id, label, t) for t in range(T)], rows, cols, vals, "=", 0.0)
        ctx.charge[s.id], ctx.discharge[s.id], ctx.soc[s.id] = ch, dis, soc
        base = zi[s.zone] * T + np.arange(T)
        r += [base, base]
        c_ += [dis, ch]
        v += [np.ones(T), -np.ones(T)]
        if s.variable_om:
            ctx.cost("variable_om", dis, s.variable_om * ctx.hour_weight)


def add_hydro_budget(problem: PeriodProblem, ctx: PeriodContext):
    """Each block's hydro output is limited by its source week's energy budget."""
    system, label = ctx.system, ctx.label
    for c in system.generators:
        if not c.tech.is_hydro:
            continue
        if c.id not in system.hydro_budgets:
            raise SchemaError(f"hydro cluster {c.id} has no monthly budget", file="hydro_budgets.csv")
        g = ctx.gen[c.id]
        n = len(ctx.blocks)
        rows, cols, vals, rhs = [], [], [], []
        for b, blk in enumerate(ctx.blocks):
            a, e = ctx.block_start[b], ctx.block_start[b + 1]
            rows.append(np.full(e - a, b))
            cols.append(g[a:e])
            vals.append(np.full(e - a, float(blk.repeats)))
            rhs.append(system.week_hydro_budget(c.id, blk.week))
        problem.add_rows("hydro_budget", [(c.id, label, b) for b in range(n)], np.concatenate(rows),
                         np.concatenate(cols), np.concatenate(vals), "<=", np.array(rhs))


def add_transmission(problem: PeriodProblem, ctx: PeriodContext, expandable: bool = True):
    """Directed flows on every corridor; losses are taken on receipt.

    In a myopic period the expansion allowance comes from
    ``transmission_expansion_bound``; foresight problems pass
    ``expandable=False`` and supply their own capacity handles.
    """
    system, scenario, label, T = ctx.system, ctx.scenario, ctx.label, ctx.T
    r, c_, v = ctx._balance_entries
    zi = ctx._zone_index
    for k in system.corridors:
        ref = ctx.corridor_cap[k.id]
        if expandable and ref.fixed:
            bound = transmission_expansion_bound(ref.value, scenario.transmission_expansion_limit,
                                                 scenario.transmission_floor_mw)
            if bound > 0:
                x = problem.add_var("tx_build", (k.id, label), 0.0, bound)
                cap = problem.add_var("tx_cap", (k.id, label))
                problem.add_row("tx_cap_def", (k.id, label), {cap: 1.0, x: -1.0}, "=", ref.value)
                ctx.corridor_build[k.id] = x
                ctx.corridor_cap[k.id] = ref = CapRef(index=cap)
                if k.effective_cost:
                    ctx.cost("transmission", x, k.effective_cost)
        ones = np.ones(T)
        fwd = _cap_limited_vars(problem, ctx, "flow_fwd", k.id, ref, ones, "flow_fwd_cap")
        rev = _cap_limited_vars(problem, ctx, "flow_rev", k.id, ref, ones, "flow_rev_cap")
        ctx.flow[k.id] = (fwd, rev)
        keep = 1.0 - k.effective_loss
        a = zi[k.zone_from] * T + np.arange(T)
        b = zi[k.zone_to] * T + np.arange(T)
        r += [a, b, b, a]
        c_ += [fwd, fwd, rev, rev]
        v += [-ones, keep * ones, -ones, keep * ones]


def add_unit_commitment(problem: PeriodProblem, ctx: PeriodContext):
    """Linearized commitment: continuous committed MW with min load, ramping,
    start/stop accounting and rolling-window minimum up and down times.

    Blocks are not cyclic here; transitions are counted from the second hour.
    """
    system, label, T = ctx.system, ctx.label, ctx.T
    first = ctx.first_hour_mask()
    prev = ctx.prev_hour()
    inner = np.flatnonzero(~first)
    w = ctx.hour_weight
    for c in system.generators:
        if not c.tech.commits:
            continue
        tech = c.tech
        if not tech.has_uc_params:
            raise ConfigurationError(f"unit commitment requested but tech {tech.name} (cluster {c.id}) lacks UC parameters")
        ref = ctx.cap[c.id]
        g = ctx.gen[c.id]
        keys = [(c.id, label, t) for t in range(T)]
        u = _cap_limited_vars(problem, ctx, "commit", c.id, ref, np.ones(T), "commit_cap")
        ub0 = np.where(first, 0.0, INF)
        s = problem.add_vars("startup", keys, 0.0, ub0)
        d = problem.add_vars("shutdown", keys, 0.0, ub0)
        ctx.commit[c.id], ctx.startup[c.id], ctx.shutdown[c.id] = u, s, d
        rows = np.repeat(np.arange(T), 2)
        problem.add_rows("gen_le_commit", keys, rows, np.column_stack([g, u]).ravel(),
                         np.tile([1.0, -1.0], T), "<=", 0.0)
        problem.add_rows("min_load", keys, rows, np.column_stack([g, u]).ravel(),
                         np.tile([1.0, -tech.min_load_fraction], T), ">=", 0.0)
        # ramping on installed capacity
        n = len(inner)
        rkeys = [(c.id, label, int(t)) for t in inner]
        rf = tech.ramp_fraction_per_hour
        for kind, sign in (("ramp_up", 1.0), ("ramp_down", -1.0)):
            if ref.fixed:
                problem.add_rows(kind, rkeys, np.repeat(np.arange(n), 2),
                                 np.column_stack([g[inner], g[prev[inner]]]).ravel(),
                                 np.tile([sign, -sign], n), "<=", rf * ref.value)
            else:
                problem.add_rows(kind, rkeys, np.repeat(np.arange(n), 3),
                                 np.column_stack([g[inner], g[prev[inner]], np.full(n, ref.index)]).ravel(),
                                 np.tile([sign, -sign, -rf], n), "<=", 0.0)
        # u_t - u_{t-1} - s_t + d_t = 0
        problem.add_rows("commit_transition", rkeys, np.repeat(np.arange(n), 4),
                         np.column_stack([u[inner], u[prev[inner]], s[inner], d[inner]]).ravel(),
                         np.tile([1.0, -1.0, -1.0, 1.0], n), "=", 0.0)
        _min_time_rows(problem, ctx, c, u, s, d, ref)
        if tech.startup_cost_per_mw:
            ctx.cost("startup", s, tech.startup_cost_per_mw * w)


def _window(ctx: PeriodContext, t: int, length: int) -> np.ndarray:
    """Hours t-length+1..t clipped to t's block."""
    b = np.searchsorted(ctx.block_start, t, side="right") - 1
    lo = max(ctx.block_start[b], t - length + 1)
    return np.arange(lo, t + 1)


def _min_time_rows(problem, ctx, c, u, s, d, ref):
    label, T = ctx.label, ctx.T
    keys = [(c.id, label, t) for t in range(T)]
    for kind, length, var in (("min_up", c.tech.min_up_hours, s), ("min_down", c.tech.min_down_hours, d)):
        if not length or length <= 1:
            continue
        rows, cols, vals = [], [], []
        for t in range(T):
            win = _window(ctx, t, int(length))
            rows.append(np.full(len(win) + 1, t))
            cols.append(np.concatenate([[u[t]], var[win]]))
            # min_up:   u_t - sum s >= 0 ;  min_down:  K - u_t - sum d >= 0
            lead = 1.0 if kind == "min_up" else -1.0
            vals.append(np.concatenate([[lead], -np.ones(len(win))]))
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        if kind == "min_down":
            if ref.fixed:
                problem.add_rows(kind, keys, rows, cols, vals, ">=", -ref.value)
                continue
            rows = np.concatenate([rows, np.arange(T)])
            cols = np.concatenate([cols, np.full(T, ref.index)])
            vals = np.concatenate([vals, np.ones(T)])
        problem.add_rows(kind, keys, rows, cols, vals, ">=", 0.0)


# -- policies --------------------------------------------------------------------

def _caps_in_force(ctx: PeriodContext):
    pol = ctx.system.policies
    caps = ([pol.carbon_cap] if pol.carbon_cap is not None else []) + list(pol.regional_caps)
    for cap in caps:
        limit = cap.schedule.get(ctx.label)
        if limit is None or math.isinf(limit):
            continue
        yield cap, limit


def emission_entries(ctx: PeriodContext, zones=None):
    """(var indices, annual tCO2 coefficients) of the emissions expression."""
    cols, vals = [], []
    for c in ctx.system.generators:
        if zones is not None and c.zone not in zones:
            continue
        rate = ctx.system.emission_rate(c)
        if rate:
            cols.append(ctx.gen[c.id])
            vals.append(rate * ctx.hour_weight)
    if not cols:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(cols), np.concatenate(vals)


def add_carbon_cap_with_buyout(problem: PeriodProblem, ctx: PeriodContext):
    """emissions - excess <= cap, with excess priced at the buyout price.

    The row is multiplied by the period weight so that its dual reads directly
    in $/t: with excess strictly positive the dual equals minus the buyout price.
    """
    label = ctx.label
    for cap, limit in _caps_in_force(ctx):
        zones = None if cap.regions is None else set(ctx.system.zones_in_regions(cap.regions))
        if zones is not None and not zones:
            raise SchemaError(f"carbon cap {cap.name}: regions {sorted(cap.regions)} match no zone", file="policies.json")
        cols, vals = emission_entries(ctx, zones)
        e = problem.add_var("excess", (cap.name, label))
        ctx.excess[cap.name] = e
        ctx.cost("buyout", e, cap.buyout_price)
        pw = ctx.weight
        row = problem.add_rows("carbon_cap", [(cap.name, label)], np.zeros(len(cols) + 1, dtype=np.int64),
                               np.concatenate([cols, [e]]), np.concatenate([vals, [-1.0]]) * pw, "<=", limit * pw)
        ctx.cap_rows[cap.name] = int(row[0])


def _zero_emission(system, c):
    return not c.is_storage and system.emission_rate(c) == 0.0


def add_clean_energy_standard(problem: PeriodProblem, ctx: PeriodContext):
    """Qualifying generation >= fraction x served demand, per region set."""
    system, label = ctx.system, ctx.label
    w = ctx.hour_weight
    for std in system.policies.ces_rps:
        f = std.fractions.get(label, 0.0)
        zones = set(system.zones_in_regions(std.regions))
        if not zones:
            raise SchemaError(f"clean standard {std.name}: regions {sorted(std.regions)} match no zone", file="policies.json")
        if f <= 0:
            continue
        cols, vals = [], []
        for c in system.generators:
            if c.zone not in zones:
                continue
            ok = c.tech.name in std.qualifying_techs if std.qualifying_techs is not None else _zero_emission(system, c)
            if ok:
                cols.append(ctx.gen[c.id])
                vals.append(w)
        demand = 0.0
        for z in sorted(zones):
            cols.append(ctx.unserved[z])
            vals.append(f * w)
            demand += float(w @ ctx.demand(z))
        cols, vals = np.concatenate(cols), np.concatenate(vals)
        problem.add_rows("clean_standard", [(std.name, label)], np.zeros(len(cols), dtype=np.int64),
                         cols, vals, ">=", f * demand)


def add_min_capacity_targets(problem: PeriodProblem, ctx: PeriodContext):
    system, label = ctx.system, ctx.label
    for tgt in system.policies.min_capacity_targets:
        mw = tgt.targets.get(label, 0.0)
        zones = set(system.zones_in_regions(tgt.regions))
        if not zones:
            raise SchemaError(f"capacity target {tgt.name}: regions {sorted(tgt.regions)} match no zone", file="policies.json")
        if mw <= 0:
            continue
        coefs, const = {}, 0.0
        for c in system.clusters:
            if c.zone in zones and c.tech.name in tgt.techs:
                ref = ctx.cap[c.id]
                if ref.fixed:
                    const += ref.value
                else:
                    coefs[ref.index] = 1.0
        if not coefs and const >= mw * (1.0 - 1e-7):
            continue  # frozen plan already meets the target (up to solver noise)
        problem.add_row("capacity_target", (tgt.name, label), coefs, ">=", mw - const)


def assemble_objective(problem: PeriodProblem, contexts):
    """Move every context's annual cost terms into the objective at its period weight."""
    for ctx in contexts:
        for comp, idx, coef in ctx.costs:
            problem.add_cost(comp, ctx.label, idx, coef, ctx.weight)
        for comp, value in ctx.offsets:
            problem.add_offset(comp, ctx.label, value, ctx.weight)
    return problem


def add_operations(problem: PeriodProblem, ctx: PeriodContext, expandable_tx: bool = True):
    """Every dispatch-level block in canonical order."""
    build_dispatch_block(problem, ctx)
    add_storage_constraints(problem, ctx)
    add_transmission(problem, ctx, expandable=expandable_tx)
    _finish_balance(problem, ctx)
    add_hydro_budget(problem, ctx)
    if ctx.unit_commitment:
        add_unit_commitment(problem, ctx)
    add_carbon_cap_with_buyout(problem, ctx)
    add_clean_energy_standard(problem, ctx)
    add_min_capacity_targets(problem, ctx)
