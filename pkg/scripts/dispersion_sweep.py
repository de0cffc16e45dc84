"""Measured vs predicted capillary drop frequencies and the log-log slope in k."""

import argparse

import numpy as np

from capeuler.io import output_root, write_timeseries
from capeuler.solver import dispersion_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--k", type=int, nargs="+", default=[2, 3, 4, 6, 8, 12, 16])
    ap.add_argument("--n-theta", type=int, default=128)
    ap.add_argument("--n-r", type=int, default=32)
    ap.add_argument("--out")
    args = ap.parse_args()

    rows = []
    for k in args.k:
        r = dispersion_probe(k, args.eps, n_theta=args.n_theta, n_r=args.n_r)
        rows.append({"k": k, "measured": r.measured, "predicted": r.predicted, "rel_error": r.rel_error})
        print(f"k={k:3d}  omega={r.measured:.8g}  predicted={r.predicted:.8g}  rel.err={r.rel_error:.2e}")
    slope = np.polyfit(np.log(args.k), np.log([r["measured"] for r in rows]), 1)[0]
    print(f"log-log slope: {slope:.4f}")
    path = write_timeseries(output_root(args.out) / "scripts" / "dispersion_sweep.csv", rows,
                            ("k", "measured", "predicted", "rel_error"))
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
