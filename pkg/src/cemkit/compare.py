"""Cross-run comparison: delta tables with cost-agreement checks, plus plot-ready tables."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path

from cemkit.errors import ComparisonError

HARMONIZATION_TOLERANCE = 0.005  # relative operational NPV gap regarded as agreement
PLAN_DIVERGENCE = 0.05  # relative capacity gap reported as an (expected) alternate optimum

# metric families written to the csv bundle, one file each
FAMILIES = ("npv", "annual_cost", "cost", "capacity", "generation", "emissions", "transmission")


@dataclass(frozen=True)
class RunSummary:
    name: str
    path: str
    kind: str  # plan | simulation
    scenario_hash: str
    configuration: str
    values: dict  # (family, period, item) -> value


@dataclass(frozen=True)
class ComparisonReport:
    runs: tuple  # RunSummary
    scenario_hash: str
    deltas: dict  # (run_a, run_b) -> {key: (absolute, relative)}
    flags: tuple = ()  # human-readable findings
    cost_breaches: tuple = ()  # (run_a, run_b, relative NPV gap)
    tolerance: float = HARMONIZATION_TOLERANCE

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.runs]

    def run(self, name: str) -> RunSummary:
        for r in self.runs:
            if r.name == name:
                return r
        raise KeyError(name)

    def keys(self) -> list[tuple]:
        out = set()
        for r in self.runs:
            out.update(r.values)
        return sorted(out)

    def stamp(self) -> str:
        """Content hash over every value and delta; distinct reports get distinct stamps."""
        body = {
            "runs": [[r.name, r.kind, r.scenario_hash, r.configuration,
                      [[list(k), repr(v)] for k, v in sorted(r.values.items())]] for r in self.runs],
            "tolerance": repr(self.tolerance),
        }
        return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class HarmonizationResult:
    passed: bool
    tolerance: float
    max_gap: float
    gaps: dict  # (run_a, run_b) -> relative NPV gap
    diagnosis: tuple = field(default_factory=tuple)


# -- loading -----------------------------------------------------------------------

def _read_csv(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def load_run(directory, name: str | None = None) -> RunSummary:
    """Flatten a results directory into ``(family, period, item) -> value``."""
    d = Path(directory)
    try:
        costs = json.loads((d / "costs.json").read_text(encoding="utf-8"))
        manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ComparisonError(f"{d} is not a results directory: {exc.filename} missing") from None
    v: dict = {("npv", "", ""): float(costs["npv"])}
    for label, rec in costs["periods"].items():
        v[("annual_cost", label, "")] = float(rec["total"])
        for comp, val in rec["components"].items():
            v[("cost", label, comp)] = float(val)
    for row in _read_csv(d / "trajectory.csv"):
        if row["kind"] == "corridor":
            key = ("transmission", row["period"], "")
        else:
            key = ("capacity", row["period"], row["tech"])
        v[key] = v.get(key, 0.0) + float(row["capacity_mw"])
    for row in _read_csv(d / "dispatch_summary.csv"):
        if row["metric"].startswith("generation:"):
            key = ("generation", row["period"], row["tech"])
            v[key] = v.get(key, 0.0) + float(row["mwh"])
    for row in _read_csv(d / "emissions.csv"):
        v[("emissions", row["period"], "")] = float(row["emissions_t"])
    return RunSummary(
        name=name or d.name,
        path=str(d),
        kind=costs.get("kind", "plan"),
        scenario_hash=manifest["scenario_hash"],
        configuration=(manifest.get("configuration") or {}).get("name", ""),
        values=dict(sorted(v.items())),
    )


def _unique_names(paths) -> list[str]:
    names, seen = [], {}
    for p in paths:
        base = Path(p).name or str(p)
        seen[base] = seen.get(base, 0) + 1
        names.append(base if seen[base] == 1 else f"{base}#{seen[base]}")
    return names


# -- diffing -----------------------------------------------------------------------

def pair_delta(a: float, b: float) -> tuple[float, float]:
    """(b - a, relative); the denominator is symmetric in the pair so deltas flip sign exactly."""
    diff = b - a
    return diff, diff / max(1.0, abs(a), abs(b))


def diff_summaries(runs, tolerance: float = HARMONIZATION_TOLERANCE) -> ComparisonReport:
    runs = list(runs)
    if len(runs) < 2:
        raise ComparisonError("comparison needs at least two runs")
    hashes = sorted({r.scenario_hash for r in runs})
    if len(hashes) > 1:
        detail = ", ".join(f"{r.name}={r.scenario_hash[:12]}" for r in runs)
        raise ComparisonError(f"runs were produced under different scenarios ({detail})")
    keys = sorted(set().union(*(r.values for r in runs)))
    deltas = {}
    for ra, rb in permutations(runs, 2):
        deltas[(ra.name, rb.name)] = {k: pair_delta(ra.values.get(k, 0.0), rb.values.get(k, 0.0)) for k in keys}
    flags, breaches = [], []
    for i, ra in enumerate(runs):
        for rb in runs[i + 1:]:
            d = deltas[(ra.name, rb.name)]
            gap = abs(d[("npv", "", "")][1])
            if gap > tolerance:
                breaches.append((ra.name, rb.name, gap))
                flags.append(f"cost: {ra.name} vs {rb.name} NPV differs by {gap:.4%} (tolerance {tolerance:.4%})")
            op = _component_totals(ra), _component_totals(rb)
            if op[0] and op[1]:
                da, db = sum(op[0].values()), sum(op[1].values())
                sign = "lower than" if db < da else "higher than" if db > da else "equal to"
                flags.append(f"info: {rb.name} total annual cost is {sign} {ra.name} ({db - da:+.6g} $)")
            plan = [(k, rel) for k, (_, rel) in d.items() if k[0] == "capacity" and abs(rel) > PLAN_DIVERGENCE]
            if plan:
                k, rel = max(plan, key=lambda t: (abs(t[1]), t[0]))
                flags.append(f"info: {ra.name} vs {rb.name} plans diverge on {len(plan)} capacity entries, "
                             f"largest {k[2]} in {k[1]} ({rel:+.2%})")
    return ComparisonReport(tuple(runs), hashes[0], deltas, tuple(flags), tuple(breaches), tolerance)


def diff_runs(runs, tolerance: float = HARMONIZATION_TOLERANCE) -> ComparisonReport:
    """Compare result directories that share a scenario hash."""
    paths = list(runs)
    if len(paths) < 2:
        raise ComparisonError("comparison needs at least two runs")
    names = _unique_names(paths)
    return diff_summaries([load_run(p, n) for p, n in zip(paths, names)], tolerance)


def _component_totals(run: RunSummary) -> dict:
    out = {}
    for (fam, _, item), val in run.values.items():
        if fam == "cost":
            out[item] = out.get(item, 0.0) + val
    return out


def harmonization_check(runs, tolerance: float = HARMONIZATION_TOLERANCE) -> HarmonizationResult:
    """Pass when every pair's operational NPV agrees within ``tolerance``.

    A failure names the cost component and the capacity entries with the
    largest gaps, which is usually where an input mismatch shows up first.
    """
    report = runs if isinstance(runs, ComparisonReport) else diff_runs(runs, tolerance)
    gaps, diagnosis = {}, []
    rs = list(report.runs)
    for i, ra in enumerate(rs):
        for rb in rs[i + 1:]:
            gaps[(ra.name, rb.name)] = abs(pair_delta(ra.values[("npv", "", "")], rb.values[("npv", "", "")])[1])
    worst = max(gaps.values()) if gaps else 0.0
    passed = worst <= tolerance
    if not passed:
        ra_name, rb_name = max(gaps, key=lambda k: (gaps[k], k))
        ra, rb = report.run(ra_name), report.run(rb_name)
        ca, cb = _component_totals(ra), _component_totals(rb)
        comps = sorted(set(ca) | set(cb))
        if comps:
            comp = max(comps, key=lambda c: (abs(cb.get(c, 0.0) - ca.get(c, 0.0)), c))
            diagnosis.append(f"largest cost component gap: {comp} "
                             f"({cb.get(comp, 0.0) - ca.get(comp, 0.0):+.6g} $ summed over periods, "
                             f"{ra_name} -> {rb_name})")
        caps = [(k, d) for k, d in report.deltas[(ra_name, rb_name)].items() if k[0] == "capacity" and d[0] != 0]
        caps.sort(key=lambda t: (-abs(t[1][0]), t[0]))
        for k, (ab, rel) in caps[:3]:
            diagnosis.append(f"capacity gap: {k[2]} in {k[1]} {ab:+.6g} MW ({rel:+.2%})")
    return HarmonizationResult(passed, tolerance, worst, gaps, tuple(diagnosis))


# -- emission ----------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def _markdown(report: ComparisonReport, check: HarmonizationResult) -> str:
    out = io.StringIO()
    names = report.names
    out.write("# Run comparison\n\n")
    out.write(f"- report stamp: `{report.stamp()}`\n")
    out.write(f"- scenario hash: `{report.scenario_hash}`\n")
    out.write(f"- harmonization: {'PASS' if check.passed else 'FAIL'} "
              f"(max NPV gap {check.max_gap:.6%}, tolerance {check.tolerance:.4%})\n\n")
    out.write("## Runs\n\n| run | kind | configuration | NPV ($) |\n|---|---|---|---|\n")
    for r in report.runs:
        out.write(f"| {r.name} | {r.kind} | {r.configuration} | {_fmt(r.values[('npv', '', '')])} |\n")
    out.write("\n## Values\n\n| metric | period | item | " + " | ".join(names) + " |\n")
    out.write("|---|---|---|" + "---|" * len(names) + "\n")
    for k in report.keys():
        out.write(f"| {k[0]} | {k[1]} | {k[2]} | " + " | ".join(_fmt(r.values.get(k, 0.0)) for r in report.runs)
                  + " |\n")
    base = names[0]
    for other in names[1:]:
        out.write(f"\n## Deltas: {other} minus {base}\n\n| metric | period | item | absolute | relative |\n")
        out.write("|---|---|---|---|---|\n")
        for k, (ab, rel) in report.deltas[(base, other)].items():
            if ab != 0.0:
                out.write(f"| {k[0]} | {k[1]} | {k[2]} | {_fmt(ab)} | {_fmt(rel)} |\n")
    out.write("\n## Flags\n\n")
    for f in report.flags or ("none",):
        out.write(f"- {f}\n")
    if check.diagnosis:
        out.write("\n## Diagnosis\n\n")
        for d in check.diagnosis:
            out.write(f"- {d}\n")
    return out.getvalue()


def _bundle_rows(report: ComparisonReport, family: str):
    rows = []
    for r in report.runs:
        for (fam, period, item), val in r.values.items():
            if fam == family:
                metric = f"{fam}:{item}" if item else fam
                rows.append((period, r.name, metric, val))
    return rows


def emit_report(report: ComparisonReport, out, format: str = "markdown",
                check: HarmonizationResult | None = None) -> list[Path]:
    """Write ``report.md`` or a ``plots/`` bundle of long tables (period, run, metric, value)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if format == "markdown":
        check = check or harmonization_check(report, report.tolerance)
        path = out / "report.md"
        path.write_text(_markdown(report, check), encoding="utf-8")
        return [path]
    if format != "csv-bundle":
        raise ValueError(f"unknown report format {format!r}")
    plots = out / "plots"
    plots.mkdir(exist_ok=True)
    written = []
    for fam in FAMILIES:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("period", "run", "metric", "value"))
        for period, run, metric, val in _bundle_rows(report, fam):
            w.writerow((period, run, metric, _fmt(val)))
        path = plots / f"{fam}.csv"
        path.write_text(buf.getvalue(), encoding="utf-8")
        written.append(path)
    return written


def load_bundle(directory) -> dict:
    """Read a csv bundle back as ``{run: {(family, period, item): value}}``."""
    out: dict = {}
    for fam in FAMILIES:
        for row in _read_csv(Path(directory) / "plots" / f"{fam}.csv"):
            metric = row["metric"]
            item = metric.split(":", 1)[1] if ":" in metric else ""
            out.setdefault(row["run"], {})[(fam, row["period"], item)] = float(row["value"])
    return out
