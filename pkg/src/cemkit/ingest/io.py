"""Read and write the canonical input directory.

Layout (UTF-8 CSV with header rows unless noted)::

    zones.csv             zone,region_tags            (tags ';'-separated)
    demand.csv            hour,<zone>,...             MW
    technologies.csv      name,fuel,heat_rate,...     see TECH_COLUMNS
    fuels.csv             fuel,emission_factor,<period label>...
    units.csv             existing units, clustered on load
    new_build_options.csv candidate generator clusters
    storage.csv           existing and candidate storage
    corridors.csv         inter-zonal transmission
    hydro_budgets.csv     cluster,m1..m12             MWh per calendar month
    profiles/<name>.csv   hour,cf
    policies.json         policy set available to scenarios
    horizon.json          periods, discount rate, optional financial overrides
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from cemkit.domain import (
    FinancialParams,
    FuelSpec,
    Period,
    PlanningHorizon,
    ResourceCluster,
    StorageParams,
    SystemData,
    TechClass,
    TransmissionCorridor,
    Zone,
)
from cemkit.errors import CemkitError, InvalidParameterError, SchemaError
from cemkit.ingest.clustering import RawUnitRecord, cluster_units
from cemkit.ingest.scenario import policy_from_json, policy_to_json

TECH_COLUMNS = [
    "name", "fuel", "heat_rate", "emission_rate", "is_ccs", "capture_rate", "is_firm",
    "is_variable", "is_storage", "is_hydro", "unit_size", "min_load_fraction",
    "ramp_fraction_per_hour", "min_up_hours", "min_down_hours", "startup_cost_per_mw",
]
UNIT_COLUMNS = [
    "unit_id", "zone", "tech", "capacity_mw", "heat_rate", "fixed_om", "variable_om",
    "build_year", "lifetime_years", "profile", "cluster",
]
NEW_BUILD_COLUMNS = [
    "id", "zone", "tech", "capex_overnight", "interconnect_capex", "fixed_om", "variable_om",
    "lifetime_years", "max_new_capacity", "profile", "wacc_override",
]
STORAGE_COLUMNS = [
    "id", "zone", "tech", "power_capex", "energy_capex", "duration_fixed_hours",
    "round_trip_efficiency", "existing_power", "existing_energy", "fixed_om", "variable_om",
    "lifetime_years", "build_year", "new_build_allowed", "max_new_power",
]
CORRIDOR_COLUMNS = [
    "id", "zone_from", "zone_to", "existing_capacity", "loss_fraction", "reinforcement_cost",
    "intra_regional_adder",
]
MONTH_COLUMNS = [f"m{i}" for i in range(1, 13)]
REQUIRED_FILES = [
    "zones.csv", "demand.csv", "technologies.csv", "fuels.csv", "units.csv",
    "new_build_options.csv", "storage.csv", "corridors.csv", "hydro_budgets.csv",
    "policies.json", "horizon.json",
]


# -- low-level readers ---------------------------------------------------------

class _Table:
    def __init__(self, name, header, rows):
        self.name = name
        self.header = header
        self.rows = rows  # list of (row_number, dict)

    def __iter__(self):
        return iter(self.rows)


def _read_table(directory: Path, name: str, required: list[str]) -> _Table:
    path = directory / name
    if not path.exists():
        raise SchemaError("required file is missing", file=name)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("file is empty", file=name) from None
        for col in required:
            if col not in header:
                raise SchemaError("missing required column", file=name, column=col)
        rows = []
        for i, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(header):
                raise SchemaError(f"expected {len(header)} fields, found {len(rec)}", file=name, row=i)
            rows.append((i, dict(zip(header, rec))))
    return _Table(name, header, rows)


def _num(table, i, row, col, default=None, kind=float):
    raw = row.get(col, "")
    if raw == "":
        if default is not None or kind is None:
            return default
        raise SchemaError("value required", file=table.name, row=i, column=col)
    try:
        value = float(raw)
    except ValueError:
        raise SchemaError(f"not a number: {raw!r}", file=table.name, row=i, column=col) from None
    if kind is int:
        if not value.is_integer():
            raise SchemaError(f"not an integer: {raw!r}", file=table.name, row=i, column=col)
        return int(value)
    return value


def _opt(table, i, row, col, kind=float):
    raw = row.get(col, "")
    if raw == "":
        return None
    return _num(table, i, row, col, kind=kind)


def _bool(table, i, row, col, default=False):
    raw = row.get(col, "").strip().lower()
    if raw == "":
        return default
    if raw in ("1", "true", "yes"):
        return True
    if raw in ("0", "false", "no"):
        return False
    raise SchemaError(f"not a boolean: {raw!r}", file=table.name, row=i, column=col)


def _read_series(path: Path, name: str, column: str) -> np.ndarray:
    table = _read_table(path.parent, path.name, ["hour", column])
    values = np.array([_num(table, i, r, column) for i, r in table], dtype=float)
    hours = [_num(table, i, r, "hour", kind=int) for i, r in table]
    if hours != list(range(len(hours))):
        raise SchemaError("hour column must run 0..n-1", file=name)
    return values


# -- load ----------------------------------------------------------------------

def _load_horizon(directory: Path):
    path = directory / "horizon.json"
    if not path.exists():
        raise SchemaError("required file is missing", file="horizon.json")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        periods = tuple(
            Period(str(p["label"]), int(p["start_year"]), int(p["end_year"]), float(p.get("demand_scale", 1.0)))
            for p in doc["periods"]
        )
        horizon = PlanningHorizon(periods=periods, discount_rate=float(doc.get("discount_rate", 0.02)))
        financial = FinancialParams(**doc.get("financial", {}))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise SchemaError(f"invalid horizon document: {exc}", file="horizon.json") from None
    return horizon, financial, int(doc.get("hours_per_week", 168))


def _load_policies(directory: Path):
    path = directory / "policies.json"
    if not path.exists():
        raise SchemaError("required file is missing", file="policies.json")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", file="policies.json") from None
    try:
        return policy_from_json(doc)
    except SchemaError as exc:
        raise SchemaError(str(exc), file="policies.json") from None
    except (InvalidParameterError, KeyError, TypeError) as exc:
        raise SchemaError(f"invalid policy: {exc}", file="policies.json") from None


def _load_techs(directory: Path, fuels) -> dict[str, TechClass]:
    table = _read_table(directory, "technologies.csv", TECH_COLUMNS)
    techs = {}
    for i, r in table:
        fuel = r["fuel"] or None
        if fuel is not None and fuel not in fuels:
            raise SchemaError(f"tech {r['name']!r} references unknown fuel {fuel!r}", file=table.name, row=i, column="fuel")
        try:
            techs[r["name"]] = TechClass(
                name=r["name"],
                fuel=fuel,
                heat_rate=_num(table, i, r, "heat_rate", 0.0),
                emission_rate=_opt(table, i, r, "emission_rate"),
                is_ccs=_bool(table, i, r, "is_ccs"),
                capture_rate=_num(table, i, r, "capture_rate", 0.0),
                is_firm=_bool(table, i, r, "is_firm"),
                is_variable=_bool(table, i, r, "is_variable"),
                is_storage=_bool(table, i, r, "is_storage"),
                is_hydro=_bool(table, i, r, "is_hydro"),
                unit_size=_num(table, i, r, "unit_size", 100.0),
                min_load_fraction=_opt(table, i, r, "min_load_fraction"),
                ramp_fraction_per_hour=_opt(table, i, r, "ramp_fraction_per_hour"),
                min_up_hours=_opt(table, i, r, "min_up_hours", kind=int),
                min_down_hours=_opt(table, i, r, "min_down_hours", kind=int),
                startup_cost_per_mw=_opt(table, i, r, "startup_cost_per_mw"),
            )
        except InvalidParameterError as exc:
            raise SchemaError(str(exc), file=table.name, row=i) from None
    return techs


def _load_fuels(directory: Path, labels) -> dict[str, FuelSpec]:
    table = _read_table(directory, "fuels.csv", ["fuel", "emission_factor", *labels])
    fuels = {}
    for i, r in table:
        try:
            fuels[r["fuel"]] = FuelSpec(
                id=r["fuel"],
                price_by_period={lab: _num(table, i, r, lab) for lab in labels},
                emission_factor=_num(table, i, r, "emission_factor"),
            )
        except InvalidParameterError as exc:
            raise SchemaError(str(exc), file=table.name, row=i) from None
    return fuels


def _check_ref(table, i, kind, value, known, column):
    if value not in known:
        raise SchemaError(f"unknown {kind} id {value!r} (known: {', '.join(sorted(known))})", file=table.name, row=i, column=column)


def load_system(directory, clusters_per_tech_zone: int = 1) -> SystemData:
    """Load and cross-reference a canonical input directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise SchemaError(f"not a directory: {directory}")
    for name in REQUIRED_FILES:
        if not (directory / name).exists():
            raise SchemaError("required file is missing", file=name)

    horizon, financial, hours_per_week = _load_horizon(directory)
    policies = _load_policies(directory)

    ztab = _read_table(directory, "zones.csv", ["zone", "region_tags"])
    zone_rows = [(i, r["zone"], frozenset(t for t in r["region_tags"].split(";") if t)) for i, r in ztab]
    zone_ids = [z for _, z, _ in zone_rows]
    if len(set(zone_ids)) != len(zone_ids):
        raise SchemaError("duplicate zone ids", file="zones.csv")

    dtab = _read_table(directory, "demand.csv", ["hour", *zone_ids])
    hours = [_num(dtab, i, r, "hour", kind=int) for i, r in dtab]
    if hours != list(range(len(hours))):
        raise SchemaError("hour column must run 0..n-1", file="demand.csv")
    n_hours = len(hours)
    zones = tuple(
        Zone(z, np.array([_num(dtab, i, r, z) for i, r in dtab]), tags) for _, z, tags in zone_rows
    )

    fuels = _load_fuels(directory, horizon.labels)
    techs = _load_techs(directory, fuels)

    profiles: dict[str, np.ndarray] = {}

    def profile(table, i, name):
        if not name:
            return None
        if name not in profiles:
            path = directory / "profiles" / f"{name}.csv"
            rel = f"profiles/{name}.csv"
            if not path.exists():
                raise SchemaError(f"profile {name!r} not found", file=table.name, row=i, column="profile")
            series = _read_series(path, rel, "cf")
            if len(series) != n_hours:
                raise SchemaError(f"length mismatch: {len(series)} hours, demand has {n_hours}", file=rel)
            profiles[name] = series
        return name

    utab = _read_table(directory, "units.csv", UNIT_COLUMNS)
    units = []
    for i, r in utab:
        _check_ref(utab, i, "zone", r["zone"], set(zone_ids), "zone")
        _check_ref(utab, i, "tech", r["tech"], set(techs), "tech")
        try:
            units.append(
                RawUnitRecord(
                    unit_id=r["unit_id"],
                    zone=r["zone"],
                    tech=r["tech"],
                    capacity=_num(utab, i, r, "capacity_mw"),
                    heat_rate=_num(utab, i, r, "heat_rate", techs[r["tech"]].heat_rate),
                    fixed_om=_num(utab, i, r, "fixed_om", 0.0),
                    build_year=_num(utab, i, r, "build_year", kind=int),
                    variable_om=_num(utab, i, r, "variable_om", 0.0),
                    lifetime_years=_num(utab, i, r, "lifetime_years", kind=int),
                    profile=profile(utab, i, r["profile"]),
                    cluster=r["cluster"] or None,
                )
            )
        except InvalidParameterError as exc:
            raise SchemaError(str(exc), file=utab.name, row=i) from None
        if techs[r["tech"]].fuel is not None and units[-1].heat_rate <= 0:
            raise SchemaError("fueled unit needs heat_rate > 0", file=utab.name, row=i, column="heat_rate")
    try:
        clusters = cluster_units(units, clusters_per_tech_zone, techs, profiles)
    except InvalidParameterError as exc:
        raise SchemaError(str(exc), file="units.csv") from None
    first_year = horizon.periods[0].start_year
    for c in clusters:
        if c.build_year > first_year:
            raise SchemaError(f"existing cluster {c.id} built after the first period", file="units.csv")

    ntab = _read_table(directory, "new_build_options.csv", NEW_BUILD_COLUMNS)
    for i, r in ntab:
        _check_ref(ntab, i, "zone", r["zone"], set(zone_ids), "zone")
        _check_ref(ntab, i, "tech", r["tech"], set(techs), "tech")
        try:
            clusters.append(
                ResourceCluster(
                    id=r["id"],
                    zone=r["zone"],
                    tech=techs[r["tech"]],
                    existing_capacity=0.0,
                    build_year=first_year,
                    lifetime_years=_num(ntab, i, r, "lifetime_years", kind=int),
                    new_build_allowed=True,
                    max_new_capacity=_num(ntab, i, r, "max_new_capacity", math.inf),
                    capex_overnight=_num(ntab, i, r, "capex_overnight"),
                    interconnect_capex=_num(ntab, i, r, "interconnect_capex", 0.0),
                    fixed_om=_num(ntab, i, r, "fixed_om", 0.0),
                    variable_om=_num(ntab, i, r, "variable_om", 0.0),
                    profile=profiles.get(profile(ntab, i, r["profile"])),
                    wacc_override=_opt(ntab, i, r, "wacc_override"),
                )
            )
        except InvalidParameterError as exc:
            raise SchemaError(str(exc), file=ntab.name, row=i) from None

    stab = _read_table(directory, "storage.csv", STORAGE_COLUMNS)
    for i, r in stab:
        _check_ref(stab, i, "zone", r["zone"], set(zone_ids), "zone")
        _check_ref(stab, i, "tech", r["tech"], set(techs), "tech")
        if not techs[r["tech"]].is_storage:
            raise SchemaError(f"tech {r['tech']!r} is not a storage tech", file=stab.name, row=i, column="tech")
        try:
            params = StorageParams(
                power_capex=_num(stab, i, r, "power_capex", 0.0),
                energy_capex=_num(stab, i, r, "energy_capex", 0.0),
                duration_fixed_hours=_opt(stab, i, r, "duration_fixed_hours"),
                round_trip_efficiency=_num(stab, i, r, "round_trip_efficiency"),
                existing_power=_num(stab, i, r, "existing_power", 0.0),
                existing_energy=_num(stab, i, r, "existing_energy", 0.0),
            )
            clusters.append(
                ResourceCluster(
                    id=r["id"],
                    zone=r["zone"],
                    tech=techs[r["tech"]],
                    existing_capacity=params.existing_power,
                    build_year=_num(stab, i, r, "build_year", first_year, kind=int),
                    lifetime_years=_num(stab, i, r, "lifetime_years", kind=int),
                    new_build_allowed=_bool(stab, i, r, "new_build_allowed"),
                    max_new_capacity=_num(stab, i, r, "max_new_power", math.inf),
                    fixed_om=_num(stab, i, r, "fixed_om", 0.0),
                    variable_om=_num(stab, i, r, "variable_om", 0.0),
                    storage=params,
                )
            )
        except InvalidParameterError as exc:
            raise SchemaError(str(exc), file=stab.name, row=i) from None

    ctab = _read_table(directory, "corridors.csv", CORRIDOR_COLUMNS)
    corridors = []
    for i, r in ctab:
        _check_ref(ctab, i, "zone", r["zone_from"], set(zone_ids), "zone_from")
        _check_ref(ctab, i, "zone", r["zone_to"], set(zone_ids), "zone_to")
        try:
            corridors.append(
                TransmissionCorridor(
                    id=r["id"],
                    zone_from=r["zone_from"],
                    zone_to=r["zone_to"],
                    existing_capacity=_num(ctab, i, r, "existing_capacity"),
                    loss_fraction=_num(ctab, i, r, "loss_fraction", 0.0),
                    reinforcement_cost=_num(ctab, i, r, "reinforcement_cost", 0.0),
                    intra_regional_adder=_bool(ctab, i, r, "intra_regional_adder"),
                )
            )
        except InvalidParameterError as exc:
            raise SchemaError(str(exc), file=ctab.name, row=i) from None

    htab = _read_table(directory, "hydro_budgets.csv", ["cluster", *MONTH_COLUMNS])
    cluster_ids = {c.id for c in clusters}
    budgets = {}
    for i, r in htab:
        _check_ref(htab, i, "cluster", r["cluster"], cluster_ids, "cluster")
        budgets[r["cluster"]] = tuple(_num(htab, i, r, m) for m in MONTH_COLUMNS)

    for c in clusters:
        if c.tech.is_hydro and c.id not in budgets:
            raise SchemaError(f"hydro cluster {c.id!r} has no monthly budget", file="hydro_budgets.csv")

    for zt in policies.ces_rps + policies.min_capacity_targets:
        if not any((z_tags & zt.regions) or z in zt.regions for _, z, z_tags in zone_rows):
            raise SchemaError(f"policy {zt.name!r} regions {sorted(zt.regions)} match no zone", file="policies.json")

    try:
        return SystemData(
            zones=zones,
            clusters=tuple(clusters),
            corridors=tuple(corridors),
            fuels=fuels,
            horizon=horizon,
            hydro_budgets=budgets,
            policies=policies,
            financial=financial,
            hours_per_week=hours_per_week,
        )
    except InvalidParameterError as exc:
        raise SchemaError(str(exc)) from None


def validate_directory(directory) -> list[str]:
    """All findings for a directory; empty list means clean."""
    try:
        load_system(directory)
    except CemkitError as exc:
        return [str(exc)]
    return []


# -- write ---------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "" if x > 0 else "-inf"
    return repr(x)


def _write_table(path: Path, header, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def write_system(system: SystemData, directory) -> Path:
    """Write ``system`` in the canonical layout; ``load_system`` reads it back unchanged."""
    directory = Path(directory)
    (directory / "profiles").mkdir(parents=True, exist_ok=True)
    labels = system.horizon.labels

    _write_table(
        directory / "zones.csv",
        ["zone", "region_tags"],
        [(z.id, ";".join(sorted(z.region_tags))) for z in system.zones],
    )
    _write_table(
        directory / "demand.csv",
        ["hour", *system.zone_ids],
        [(h, *(float(z.demand[h]) for z in system.zones)) for h in range(system.n_hours)],
    )
    _write_table(
        directory / "fuels.csv",
        ["fuel", "emission_factor", *labels],
        [(f.id, f.emission_factor, *(f.price_by_period[l] for l in labels)) for f in system.fuels.values()],
    )
    techs = {}
    for c in system.clusters:
        techs.setdefault(c.tech.name, c.tech)
    _write_table(
        directory / "technologies.csv",
        TECH_COLUMNS,
        [tuple(getattr(t, col) if col != "fuel" else (t.fuel or "") for col in TECH_COLUMNS) for t in techs.values()],
    )

    profile_names = {}

    def profile_name(c):
        if c.profile is None:
            return ""
        profile_names[c.id] = c.id
        _write_table(
            directory / "profiles" / f"{c.id}.csv", ["hour", "cf"], [(h, float(v)) for h, v in enumerate(c.profile)]
        )
        return c.id

    unit_rows, new_rows, storage_rows = [], [], []
    for c in system.clusters:
        if c.is_storage:
            s = c.storage
            storage_rows.append((
                c.id, c.zone, c.tech.name, s.power_capex, s.energy_capex, s.duration_fixed_hours,
                s.round_trip_efficiency, s.existing_power, s.existing_energy, c.fixed_om, c.variable_om,
                c.lifetime_years, c.build_year, c.new_build_allowed, c.max_new_capacity,
            ))
        elif c.new_build_allowed:
            if c.existing_capacity > 0:
                raise InvalidParameterError(f"cluster {c.id}: canonical schema keeps existing and new-build resources apart")
            new_rows.append((
                c.id, c.zone, c.tech.name, c.capex_overnight, c.interconnect_capex, c.fixed_om,
                c.variable_om, c.lifetime_years, c.max_new_capacity, profile_name(c), c.wacc_override,
            ))
        else:
            prof = profile_name(c)
            for k, (year, mw) in enumerate(c.existing_vintages):
                unit_rows.append((
                    f"{c.id}#{k}", c.zone, c.tech.name, mw, c.effective_heat_rate, c.fixed_om, c.variable_om,
                    year, c.lifetime_years, prof, c.id,
                ))
    _write_table(directory / "units.csv", UNIT_COLUMNS, unit_rows)
    _write_table(directory / "new_build_options.csv", NEW_BUILD_COLUMNS, new_rows)
    _write_table(directory / "storage.csv", STORAGE_COLUMNS, storage_rows)
    _write_table(
        directory / "corridors.csv",
        CORRIDOR_COLUMNS,
        [
            (k.id, k.zone_from, k.zone_to, k.existing_capacity, k.loss_fraction, k.reinforcement_cost, k.intra_regional_adder)
            for k in system.corridors
        ],
    )
    _write_table(
        directory / "hydro_budgets.csv",
        ["cluster", *MONTH_COLUMNS],
        [(cid, *b) for cid, b in system.hydro_budgets.items()],
    )
    (directory / "policies.json").write_text(
        json.dumps(policy_to_json(system.policies), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    horizon_doc = {
        "discount_rate": system.horizon.discount_rate,
        "hours_per_week": system.hours_per_week,
        "periods": [
            {"label": p.label, "start_year": p.start_year, "end_year": p.end_year, "demand_scale": p.demand_scale}
            for p in system.horizon.periods
        ],
        "financial": asdict(system.financial),
    }
    (directory / "horizon.json").write_text(json.dumps(horizon_doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return directory
