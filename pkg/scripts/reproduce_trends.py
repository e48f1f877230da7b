"""Network power and covariance as lambda, alpha and d2/d1 vary, for three circular sensors.

Each sweep point solves the MDP and runs the Monte Carlo harness. Results go to
one CSV per axis; adjacent points are compared against their 95% half-widths.
"""

import argparse
import csv
from pathlib import Path

from wsn_tpc import config
from wsn_tpc.config import TopologySpec
from wsn_tpc.sim import sweep

AXES = {
    "lambda": ([1e-3, 1e-2, 1e-1], None),
    "alpha": ([0.5, 0.75, 0.9], None),
    "d2_over_d1": ([1.0, 1.2, 1.5], 1.0),
}


def verdict(a, ca, b, cb):
    if abs(b - a) <= ca + cb:
        return "~"
    return "up" if b > a else "down"


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=Path(__file__).parents[1] / "configs/circular3.json")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default="results/trends")
    args = parser.parse_args()

    base = config.load(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for axis, (values, ratio) in AXES.items():
        cfg = base
        if ratio is not None:
            cfg = base.replace(topology=TopologySpec(**{**base.topology.__dict__, "d2": ratio * base.topology.d1}))
        rows = sweep(cfg, axis, values, args.threads)
        with open(out / f"{axis}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["value", "status", "sum_p_watt", "ci_sum_p_watt", "sum_P", "ci_sum_P"])
            for r in rows:
                s = r.summary
                w.writerow([r.value, r.status, s.sum_p, s.ci_sum_p, s.sum_P, s.ci_sum_P] if s else [r.value, r.status])
        print(f"\n{axis}")
        print(f"{'value':>8} {'sum p [uW]':>12} {'sum P':>10}  step (p, P)")
        prev = None
        for r in rows:
            s = r.summary
            if s is None:
                print(f"{r.value:8g}  {r.status}")
                prev = None
                continue
            step = ""
            if prev is not None:
                step = f"{verdict(prev.sum_p, prev.ci_sum_p, s.sum_p, s.ci_sum_p)}, {verdict(prev.sum_P, prev.ci_sum_P, s.sum_P, s.ci_sum_P)}"
            print(f"{r.value:8g} {s.sum_p * 1e6:12.2f} {s.sum_P:10.4f}  {step}")
            prev = s


if __name__ == "__main__":
    main()
