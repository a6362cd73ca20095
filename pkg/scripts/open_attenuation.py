"""Closed-to-open loss ratio mu for several cavity decay rates.

    python scripts/open_attenuation.py --kappa 0.01 0.02 --out results/open
"""
import argparse
from pathlib import Path

import numpy as np

from hybridprobe.analysis import SCENARIOS, global_loss_ratio, open_records
from hybridprobe.cli import write_csv
from hybridprobe.dynamics import DecoherenceRates, TimeGrid
from hybridprobe.hilbert import HilbertDims
from hybridprobe.model import SystemParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/open")
    ap.add_argument("--kappa", type=float, nargs="+", default=[0.01, 0.02])
    ap.add_argument("--cutoff", type=int, default=15)
    ap.add_argument("--window", choices=("short", "long"), default="short")
    ap.add_argument("--points", type=int, default=50)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t_max = 2 * np.pi if args.window == "short" else 6 * np.pi
    grid = TimeGrid.uniform(t_max, args.points)
    d = HilbertDims(args.cutoff, args.cutoff)
    rows = []
    for kappa in args.kappa:
        closed, opened = open_records(SystemParams(0.1, 0.1), d, grid, DecoherenceRates(kappa=kappa))
        for sc in SCENARIOS:
            mu = global_loss_ratio(closed, opened, sc, args.window)
            rows.append([kappa, sc, mu])
            print(f"kappa={kappa} {sc}: mu={mu:.4f}")
    write_csv(out / "mu_vs_kappa.csv", ["kappa", "scenario", "mu"], rows)


if __name__ == "__main__":
    main()
