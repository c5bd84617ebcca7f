"""Write the bundled three-zone toy system as a CSV system directory."""

import argparse

from cemkit.ingest import load_system, write_system
from cemkit.toy import build_toy_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/toy")
    args = ap.parse_args()
    path = write_system(build_toy_system(), args.out)
    system = load_system(path)
    print(f"wrote {path}: {len(system.zones)} zones, {len(system.clusters)} clusters, "
          f"{len(system.corridors)} corridors, {system.n_hours} hours")


if __name__ == "__main__":
    main()
