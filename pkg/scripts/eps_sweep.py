"""Vanishing surface tension: distance of each eps run from the eps = 0 run."""

import argparse
import math

from capeuler.io import output_root, write_timeseries
from capeuler.solver import RTConditionError, SWEEP_SCENARIOS, eps_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="expanding-annulus", choices=SWEEP_SCENARIOS)
    ap.add_argument("--eps", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--t-end", type=float, default=0.25)
    ap.add_argument("--n-theta", type=int, default=64)
    ap.add_argument("--n-r", type=int, default=16)
    ap.add_argument("--out")
    args = ap.parse_args()

    try:
        res = eps_sweep(args.scenario, args.eps, args.t_end, args.n_theta, args.n_r)
    except RTConditionError as exc:
        raise SystemExit(f"refused: {exc}")
    rows = [{"eps": e, "d": d, "min_rt_margin": m} for e, d, m in zip(res.eps, res.distance, res.min_margin[1:])]
    for r in rows:
        print(f"eps={r['eps']:<8g} d={r['d']:.4e}  min margin={r['min_rt_margin']:.4f}")
    for (e1, d1), (e2, d2) in zip(zip(res.eps, res.distance), zip(res.eps[1:], res.distance[1:])):
        print(f"rate between eps={e1:g} and {e2:g}: {math.log(d1 / d2, e1 / e2):.3f}")
    path = write_timeseries(output_root(args.out) / "scripts" / "eps_sweep.csv", rows, ("eps", "d", "min_rt_margin"))
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
