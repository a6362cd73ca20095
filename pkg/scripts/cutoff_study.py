"""Entropy and bound deviations between a working truncation and larger references.

    python scripts/cutoff_study.py --cutoffs 15 20 25 --reference 30
"""
import argparse
from pathlib import Path

from hybridprobe.analysis import cutoff_convergence
from hybridprobe.cli import write_csv
from hybridprobe.dynamics import TimeGrid
from hybridprobe.hilbert import HilbertDims
from hybridprobe.model import SystemParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/convergence")
    ap.add_argument("--cutoffs", type=int, nargs="+", default=[20, 25])
    ap.add_argument("--reference", type=int, default=30)
    ap.add_argument("--g1", type=float, default=0.2)
    ap.add_argument("--g2", type=float, default=0.2)
    ap.add_argument("--points", type=int, default=24)
    ap.add_argument("--tol", type=float, default=1e-4)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ref = HilbertDims(args.reference, args.reference)
    rows = []
    for n in args.cutoffs:
        rep = cutoff_convergence(SystemParams(args.g1, args.g2), HilbertDims(n, n), ref,
                                 TimeGrid.uniform(n=args.points), tol=args.tol)
        rows.append([n, args.reference, rep.entropy_dev, rep.bound_dev])
        print(f"cutoff {n} vs {args.reference}: entropy {rep.entropy_dev:.2e}, bounds {rep.bound_dev:.2e}")
    write_csv(out / "cutoffs.csv", ["cutoff", "reference", "entropy_dev", "bound_rel_dev"], rows)


if __name__ == "__main__":
    main()
