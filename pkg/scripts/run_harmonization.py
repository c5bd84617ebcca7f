"""Plan the toy net-zero case with two LP backends and compare the operational NPVs.

The two plans may differ (alternate optima); their frozen-plan operational
simulations should agree on cost to within the harmonization tolerance.
"""

import argparse
import time

from cemkit.compare import HARMONIZATION_TOLERANCE, pair_delta
from cemkit.ingest import CONFIGURATIONS, net_zero
from cemkit.sequencer import compute_npv_summary, run_myopic, simulate_plan
from cemkit.solver import SolveSettings
from cemkit.toy import TOY_CAP_SCALE, build_toy_system


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--backends", nargs=2, default=["reference", "highs"])
    ap.add_argument("--tolerance", type=float, default=0.003)
    args = ap.parse_args()
    system = build_toy_system()
    scenario = net_zero(cap_scale=TOY_CAP_SCALE)
    npv = {}
    for backend in args.backends:
        t0 = time.perf_counter()
        settings = SolveSettings(backend=backend)
        plan = run_myopic(system, scenario, CONFIGURATIONS["base"], settings)
        sims = simulate_plan(system, scenario, plan, SolveSettings(backend="highs"))
        npv[backend] = compute_npv_summary(sims, system.horizon)["npv"]
        print(f"{backend:>10}: plan objective {plan.objective:.6e}  operational NPV {npv[backend]:.6e}  "
              f"({time.perf_counter() - t0:.1f} s)")
    a, b = args.backends
    gap = abs(pair_delta(npv[a], npv[b])[1])
    verdict = "agree" if gap <= args.tolerance else "DISAGREE"
    print(f"operational NPV gap {gap:.3e} ({verdict} at {args.tolerance:.2%}; "
          f"default harmonization tolerance {HARMONIZATION_TOLERANCE:.1%})")


if __name__ == "__main__":
    main()
