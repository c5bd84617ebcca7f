"""Scenario and configuration documents with their presets and overrides."""

from __future__ import annotations

import hashlib
import json
from dataclasses import replace
from pathlib import Path

from cemkit.domain import (
    CapacityTarget,
    CarbonCap,
    CleanStandard,
    Configuration,
    FuelOverride,
    PolicySet,
    Scenario,
    SystemData,
    TaxCredit,
)
from cemkit.errors import ConfigurationError, SchemaError

# national power-sector CO2 targets, million tonnes per year
NET_ZERO_TARGETS_MT = {"2027": 847.0, "2030": 186.0, "2035": 130.0, "2040": 86.7, "2045": 43.3, "2050": 0.0}


def net_zero_cap_schedule(scale: float = 1.0) -> dict[str, float]:
    """Net-zero trajectory in tCO2/yr, optionally scaled to a smaller system."""
    return {k: v * 1e6 * scale for k, v in NET_ZERO_TARGETS_MT.items()}


# -- policy JSON ---------------------------------------------------------------

def _cap_from_json(d) -> CarbonCap:
    if "preset" in d:
        if d["preset"] != "net_zero":
            raise SchemaError(f"unknown cap preset {d['preset']!r}")
        schedule = net_zero_cap_schedule(d.get("scale", 1.0))
    else:
        schedule = {str(k): float(v) for k, v in d["schedule"].items()}
    regions = d.get("regions")
    return CarbonCap(
        schedule=schedule,
        buyout_price=float(d.get("buyout_price", 200.0)),
        regions=None if regions is None else frozenset(regions),
        name=d.get("name", "national" if regions is None else "regional"),
    )


def _cap_to_json(c: CarbonCap) -> dict:
    d = {"name": c.name, "schedule": dict(c.schedule), "buyout_price": c.buyout_price}
    if c.regions is not None:
        d["regions"] = sorted(c.regions)
    return d


def policy_from_json(d: dict) -> PolicySet:
    d = d or {}
    try:
        return PolicySet(
            carbon_cap=_cap_from_json(d["carbon_cap"]) if d.get("carbon_cap") else None,
            regional_caps=tuple(_cap_from_json(c) for c in d.get("regional_caps", [])),
            ces_rps=tuple(
                CleanStandard(
                    regions=frozenset(c["regions"]),
                    fractions={str(k): float(v) for k, v in c["fractions"].items()},
                    qualifying_techs=frozenset(c["techs"]) if c.get("techs") else None,
                    name=c.get("name", "ces"),
                )
                for c in d.get("ces_rps", [])
            ),
            min_capacity_targets=tuple(
                CapacityTarget(
                    regions=frozenset(t["regions"]),
                    techs=frozenset(t["techs"]),
                    targets={str(k): float(v) for k, v in t["targets"].items()},
                    name=t.get("name", "target"),
                )
                for t in d.get("min_capacity_targets", [])
            ),
            tax_credits=tuple(
                TaxCredit(
                    techs=frozenset(t["techs"]),
                    kind=t["kind"],
                    value=float(t["value"]),
                    through_year=int(t.get("through_year", 2040)),
                )
                for t in d.get("tax_credits", [])
            ),
        )
    except KeyError as exc:
        raise SchemaError(f"policy document missing key {exc}") from None


def policy_to_json(p: PolicySet) -> dict:
    return {
        "carbon_cap": _cap_to_json(p.carbon_cap) if p.carbon_cap else None,
        "regional_caps": [_cap_to_json(c) for c in p.regional_caps],
        "ces_rps": [
            {
                "name": c.name,
                "regions": sorted(c.regions),
                "fractions": dict(c.fractions),
                "techs": sorted(c.qualifying_techs) if c.qualifying_techs is not None else None,
            }
            for c in p.ces_rps
        ],
        "min_capacity_targets": [
            {"name": t.name, "regions": sorted(t.regions), "techs": sorted(t.techs), "targets": dict(t.targets)}
            for t in p.min_capacity_targets
        ],
        "tax_credits": [
            {"techs": sorted(t.techs), "kind": t.kind, "value": t.value, "through_year": t.through_year}
            for t in p.tax_credits
        ],
    }


# -- scenario / configuration JSON ---------------------------------------------

def scenario_from_json(d: dict) -> Scenario:
    overrides = {}
    for fuel, o in (d.get("fuel_price_overrides") or {}).items():
        prices = o.get("prices")
        overrides[fuel] = FuelOverride(
            add=float(o.get("add", 0.0)),
            prices=None if prices is None else {str(k): float(v) for k, v in prices.items()},
        )
    limit = d.get("transmission_expansion_limit")
    return Scenario(
        name=d["name"],
        policy_set=policy_from_json(d.get("policies") or {}),
        transmission_expansion_limit=None if limit is None else float(limit),
        ccs_allowed=bool(d.get("ccs_allowed", True)),
        fuel_price_overrides=overrides,
        include_system_policies=bool(d.get("include_system_policies", False)),
        transmission_floor_mw=float(d.get("transmission_floor_mw", 400.0)),
    )


def scenario_to_json(s: Scenario) -> dict:
    return {
        "name": s.name,
        "policies": policy_to_json(s.policy_set),
        "transmission_expansion_limit": s.transmission_expansion_limit,
        "transmission_floor_mw": s.transmission_floor_mw,
        "ccs_allowed": s.ccs_allowed,
        "include_system_policies": s.include_system_policies,
        "fuel_price_overrides": {
            k: {"add": o.add, "prices": None if o.prices is None else dict(o.prices)}
            for k, o in sorted(s.fuel_price_overrides.items())
        },
    }


def configuration_from_json(d: dict) -> Configuration:
    weeks = d.get("weeks", "full_52")
    if weeks == "full_52":
        sampled = None
    elif isinstance(weeks, dict) and "sampled" in weeks:
        sampled = int(weeks["sampled"])
    else:
        raise ConfigurationError(f"weeks must be 'full_52' or {{'sampled': n}}, got {weeks!r}")
    return Configuration(
        name=d.get("name", "custom"),
        retirement_mode=d.get("retirement", "age_based"),
        unit_commitment=bool(d.get("unit_commitment", False)),
        sampled_weeks=sampled,
        sequencing=d.get("sequencing", "myopic"),
        operational_sim=bool(d.get("operational_sim", False)),
    )


def configuration_to_json(c: Configuration) -> dict:
    return {
        "name": c.name,
        "retirement": c.retirement_mode,
        "unit_commitment": c.unit_commitment,
        "weeks": "full_52" if c.sampled_weeks is None else {"sampled": c.sampled_weeks},
        "sequencing": c.sequencing,
        "operational_sim": c.operational_sim,
    }


def load_json(path):
    path = Path(path)
    if not path.exists():
        raise SchemaError("file not found", file=path.name)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", file=path.name) from None


def load_scenario(path) -> Scenario:
    return scenario_from_json(load_json(path))


def load_configuration(path) -> Configuration:
    return configuration_from_json(load_json(path))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def scenario_hash(scenario: Scenario) -> str:
    return hashlib.sha256(canonical_json(scenario_to_json(scenario)).encode()).hexdigest()


# -- presets -------------------------------------------------------------------

CONFIGURATIONS = {
    "base": Configuration("base"),
    "unit_commitment": Configuration("unit_commitment", unit_commitment=True),
    "economic_retirement": Configuration("economic_retirement", retirement_mode="economic"),
    "short_sample": Configuration("short_sample", sampled_weeks=20),
    "foresight": Configuration("foresight", sampled_weeks=20, sequencing="foresight"),
    "operational_simulation": Configuration("operational_simulation", unit_commitment=True, operational_sim=True),
}


def net_zero(
    buyout_price: float = 200.0,
    cap_scale: float = 1.0,
    transmission_limit: float | None = None,
    ccs_allowed: bool = True,
    name: str | None = None,
) -> Scenario:
    """Net-zero parent scenario and its child variants."""
    if name is None:
        name = "net_zero"
        if buyout_price != 200.0:
            name += f"_buyout{buyout_price:g}"
        if transmission_limit is not None:
            name += f"_tx{int(round(transmission_limit * 100))}"
        if not ccs_allowed:
            name += "_no_ccs"
    cap = CarbonCap(schedule=net_zero_cap_schedule(cap_scale), buyout_price=buyout_price)
    return Scenario(
        name=name,
        policy_set=PolicySet(carbon_cap=cap),
        transmission_expansion_limit=transmission_limit,
        ccs_allowed=ccs_allowed,
    )


def current_policies(name: str = "current_policies") -> Scenario:
    """Uses the system's own policies.json (state CES, targets, credits, local caps)."""
    return Scenario(name=name, include_system_policies=True)


# -- overrides -----------------------------------------------------------------

def apply_scenario_overrides(system: SystemData, scenario: Scenario) -> SystemData:
    """Return a copy of ``system`` carrying the scenario's prices and policies.

    Idempotent per scenario: applying the same scenario twice is a no-op.
    """
    if system.applied_scenario is not None:
        if system.applied_scenario == scenario.name:
            return system
        raise ConfigurationError(
            f"system already carries scenario {system.applied_scenario!r}; reload before applying {scenario.name!r}"
        )
    fuels = dict(system.fuels)
    for fuel_id, o in sorted(scenario.fuel_price_overrides.items()):
        if fuel_id not in fuels:
            raise SchemaError(f"fuel override references unknown fuel {fuel_id!r}", file="fuels.csv")
        spec = fuels[fuel_id]
        base = dict(o.prices) if o.prices is not None else dict(spec.price_by_period)
        fuels[fuel_id] = replace(spec, price_by_period={k: v + o.add for k, v in base.items()})
    clusters = system.clusters
    if not scenario.ccs_allowed:
        clusters = tuple(
            replace(c, new_build_allowed=False) if c.tech.is_ccs and c.new_build_allowed else c
            for c in clusters
        )
    policies = scenario.policy_set
    if scenario.include_system_policies:
        policies = system.policies.merged(scenario.policy_set)
    if not scenario.fuel_price_overrides and scenario.ccs_allowed and policies == system.policies:
        return replace(system, applied_scenario=scenario.name)
    return replace(system, fuels=fuels, clusters=clusters, policies=policies, applied_scenario=scenario.name)
