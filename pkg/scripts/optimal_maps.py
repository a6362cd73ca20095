"""Optimal-subsystem maps and efficiency ratios on a coupling grid.

    python scripts/optimal_maps.py --out results/maps --threads 4
"""
import argparse
from pathlib import Path

from hybridprobe.analysis import DEFAULT_COUPLINGS, SCENARIOS, WINDOWS, optimal_subsystem_map, scan_map
from hybridprobe.cli import write_csv
from hybridprobe.hilbert import HilbertDims


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/maps")
    ap.add_argument("--cutoff", type=int, default=25)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = list(DEFAULT_COUPLINGS)
    scans = scan_map(grid, grid, threads=args.threads, dims=HilbertDims(args.cutoff, args.cutoff))
    rows = []
    for window in WINDOWS:
        for scenario in SCENARIOS:
            table = optimal_subsystem_map(grid, grid, window, scenario, scans=scans)
            print(f"{window}/{scenario}")
            for g1, line in zip(grid, table):
                print(f"  g1={g1:<5} " + " ".join(f"{r.best_subsystem[:4]:>5}" for r in line))
                rows += [[r.g1, r.g2, r.window, r.scenario, r.best_subsystem, r.eta, r.t_star] for r in line]
    write_csv(out / "map.csv", ["g1", "g2", "window", "scenario", "best_subsystem", "eta", "t_star"], rows)


if __name__ == "__main__":
    main()
