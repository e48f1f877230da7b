"""Feasible (kappa_1, kappa_2) slices for three equal-distance sensors at several fixed kappa_3.

Writes one CSV per slice and prints the feasible fraction and the largest
symmetric PSR on each slice.
"""

import argparse
import csv
from pathlib import Path

from wsn_tpc import config
from wsn_tpc.power_control import feasibility_region_slice
from wsn_tpc.sim import gains


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=Path(__file__).parents[1] / "configs/equal_distance3.json")
    parser.add_argument("--kappa3", default="0.1,0.5,0.9")
    parser.add_argument("--resolution", type=int, default=200)
    parser.add_argument("--out", default="results/feasibility")
    args = parser.parse_args()

    cfg = config.load(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    q, noise = gains(cfg), cfg.noise_watt()
    print(f"{'kappa_3':>8} {'feasible':>9} {'max diag':>9}")
    for k3 in (float(v) for v in args.kappa3.split(",")):
        rows = feasibility_region_slice({2: k3}, args.resolution, q, noise, cfg.packet_bits, cfg.p_max)
        with open(out / f"slice_kappa3_{k3:g}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kappa_1", "kappa_2", "feasible"])
            w.writerows([a, b, int(ok)] for a, b, ok in rows)
        frac = sum(ok for *_, ok in rows) / len(rows)
        diag = max((a for a, b, ok in rows if ok and a == b), default=float("nan"))
        print(f"{k3:8.2f} {frac:9.3f} {diag:9.3f}")


if __name__ == "__main__":
    main()
