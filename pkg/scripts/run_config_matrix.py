"""Run the toy system across configurations and scenario variants; print a cost table."""

import argparse

from cemkit.ingest import CONFIGURATIONS, net_zero
from cemkit.sequencer import run_matrix, trajectory_npv
from cemkit.solver import SolveSettings
from cemkit.toy import TOY_CAP_SCALE, build_toy_system

VARIANTS = {
    "net_zero": {},
    "tx0": {"transmission_limit": 0.0},
    "tx15": {"transmission_limit": 0.15},
    "tx50": {"transmission_limit": 0.5},
    "no_ccs": {"ccs_allowed": False},
    "buyout50": {"buyout_price": 50.0},
    "buyout1000": {"buyout_price": 1000.0},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", nargs="*", default=["base", "economic_retirement", "short_sample", "foresight"])
    ap.add_argument("--variants", nargs="*", default=list(VARIANTS))
    ap.add_argument("--workers", type=int, default=2)
    ap.add_argument("--backend", default=None)
    args = ap.parse_args()
    system = build_toy_system()
    pairs = [(net_zero(cap_scale=TOY_CAP_SCALE, **VARIANTS[v]), CONFIGURATIONS[c])
             for c in args.configs for v in args.variants]
    plans = run_matrix(system, pairs, SolveSettings(backend=args.backend), workers=args.workers)
    print(f"{'configuration':<22}{'scenario':<28}{'objective':>16}{'NPV':>16}{'2050 tCO2':>14}")
    for (sc, cfg), plan in zip(pairs, plans):
        print(f"{cfg.name:<22}{sc.name:<28}{plan.objective:>16.6e}{trajectory_npv(plan, system):>16.6e}"
              f"{plan.periods[-1].readout.emissions:>14.1f}")


if __name__ == "__main__":
    main()
