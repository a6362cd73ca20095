"""Single-parameter inverse QFI curves, global and per subsystem, for the four corners.

    python scripts/qfi_panels.py --out results/qfi
"""
import argparse
from pathlib import Path

from hybridprobe.analysis import DEFAULT_COUPLINGS
from hybridprobe.cli import write_csv
from hybridprobe.dynamics import TimeGrid
from hybridprobe.estimation import LABELS, fisher_scan
from hybridprobe.hilbert import HilbertDims
from hybridprobe.model import SystemParams

SHORT = {"global": "global", "qubit": "qubit", "cavity": "cavity", "mechanics": "mech"}
CORNERS = [(DEFAULT_COUPLINGS[0], DEFAULT_COUPLINGS[0]), (DEFAULT_COUPLINGS[0], DEFAULT_COUPLINGS[-1]),
           (DEFAULT_COUPLINGS[-1], DEFAULT_COUPLINGS[0]), (DEFAULT_COUPLINGS[-1], DEFAULT_COUPLINGS[-1])]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/qfi")
    ap.add_argument("--cutoff", type=int, default=25)
    ap.add_argument("--points", type=int, default=300)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = HilbertDims(args.cutoff, args.cutoff)
    header = ["t"] + [f"invQ{i}{i}_{SHORT[l]}" for i in (1, 2) for l in LABELS]
    for g1, g2 in CORNERS:
        recs = fisher_scan(SystemParams(g1, g2), d, grid=TimeGrid.uniform(n=args.points))
        rows = ([r.t] + [r.single[l][i - 1] for i in (1, 2) for l in LABELS] for r in recs)
        write_csv(out / f"qfi_g1_{g1}_g2_{g2}.csv", header, rows)
        print(f"g1={g1} g2={g2}: {len(recs)} records")


if __name__ == "__main__":
    main()
