"""Command-line entry point: ``cemkit {validate,plan,simulate,compare}``.

Exit status is 0 on success and 2 when runs from different scenarios are
compared. Every other failure exits 1, including a failed harmonization check.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from cemkit.compare import HARMONIZATION_TOLERANCE, ComparisonError, diff_runs, emit_report, harmonization_check
from cemkit.errors import CemkitError, InfeasibleError
from cemkit.ingest import load_configuration, load_scenario, load_system, scenario_hash, validate_directory
from cemkit.sequencer import (
    build_manifest,
    directory_hashes,
    file_sha256,
    read_plan_results,
    run_plan,
    simulate_plan,
    write_plan_results,
    write_simulation_results,
)
from cemkit.solver import BACKENDS, SolveSettings

EXIT_OK, EXIT_FAIL, EXIT_MISMATCH = 0, 1, 2


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def cmd_validate(args) -> int:
    findings = validate_directory(args.system)
    for f in findings:
        print(f)
    if findings:
        return EXIT_FAIL
    print(f"{args.system}: ok")
    return EXIT_OK


def _inputs(args, **files) -> dict:
    out = {"system": {"path": str(args.system), "files": directory_hashes(args.system)}}
    for key, path in files.items():
        out[key] = {"path": str(path), "sha256": file_sha256(path)}
    return out


def cmd_plan(args) -> int:
    system = load_system(args.system)
    scenario = load_scenario(args.scenario)
    config = load_configuration(args.config)
    settings = SolveSettings(backend=args.backend)
    manifest = build_manifest("plan", scenario, config, settings, args.workers,
                              _inputs(args, scenario=args.scenario, configuration=args.config))
    manifest["out"] = str(args.out)
    plan = run_plan(system, scenario, config, settings)
    write_plan_results(args.out, system, plan, manifest)
    print(f"{config.name}/{scenario.name}: objective {plan.objective!r} -> {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    system = load_system(args.system)
    scenario = load_scenario(args.scenario)
    plan = read_plan_results(args.plan, system)
    plan_manifest = _plan_manifest(args.plan)
    if plan_manifest["scenario_hash"] != scenario_hash(scenario):
        _err(f"plan {args.plan} was produced under a different scenario")
        return EXIT_MISMATCH
    if args.periods:
        missing = [p for p in args.periods if p not in plan.labels]
        if missing:
            _err(f"plan has no period {missing[0]!r} (available: {', '.join(plan.labels)})")
            return EXIT_FAIL
        plan = _restrict(plan, args.periods)
    settings = SolveSettings(backend=args.backend)
    manifest = build_manifest("simulate", scenario, None, settings, args.workers,
                              _inputs(args, scenario=args.scenario, plan_costs=Path(args.plan) / "costs.json",
                                      plan_trajectory=Path(args.plan) / "trajectory.csv"))
    manifest["configuration"] = plan_manifest.get("configuration")
    manifest["out"] = str(args.out)
    results = simulate_plan(system, scenario, plan, settings, workers=args.workers)
    write_simulation_results(args.out, system, plan, results, manifest)
    unserved = sum(r.unserved_mwh for r in results.values())
    print(f"simulated {len(results)} periods, unserved {unserved!r} MWh -> {args.out}")
    return EXIT_OK


def _plan_manifest(directory) -> dict:
    return json.loads((Path(directory) / "manifest.json").read_text(encoding="utf-8"))


def _restrict(plan, labels):
    keep = [p for p in plan.periods if p.label in set(labels)]
    return replace(plan, periods=tuple(keep))


def cmd_compare(args) -> int:
    try:
        report = diff_runs(args.runs, args.tolerance)
    except ComparisonError as exc:
        _err(str(exc))
        return EXIT_MISMATCH
    check = harmonization_check(report, args.tolerance)
    if args.out:
        emit_report(report, args.out, "markdown", check)
        emit_report(report, args.out, "csv-bundle")
    for f in report.flags:
        print(f)
    for d in check.diagnosis:
        print(d)
    print(f"harmonization {'PASS' if check.passed else 'FAIL'}: max NPV gap {check.max_gap:.6%} "
          f"(tolerance {check.tolerance:.4%})")
    return EXIT_OK if check.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cemkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--backend", choices=BACKENDS, default=None,
                       help="LP backend (default: $CEMKIT_BACKEND or highs)")
        p.add_argument("--workers", type=int, default=1, help="parallel solves where runs are independent")

    p = sub.add_parser("validate", help="check a system directory")
    p.add_argument("--system", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plan", help="solve a capacity expansion plan")
    p.add_argument("--system", required=True)
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("--config", required=True, help="configuration JSON")
    p.add_argument("--out", required=True)
    solver_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="dispatch a frozen plan with commitment limits")
    p.add_argument("--system", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--plan", required=True, help="results directory written by 'plan'")
    p.add_argument("--periods", nargs="*", default=None)
    p.add_argument("--out", required=True)
    solver_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="diff result directories and check cost agreement")
    p.add_argument("runs", nargs="+")
    p.add_argument("--tolerance", type=float, default=HARMONIZATION_TOLERANCE)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        _err(str(exc))
        for tag in exc.rows or ():
            print(f"  {tag}", file=sys.stderr)
        return EXIT_FAIL
    except CemkitError as exc:
        _err(str(exc))
        return EXIT_FAIL
    except OSError as exc:
        _err(str(exc))
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
