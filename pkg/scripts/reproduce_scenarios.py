"""Per-link mean power and covariance for the assembly-line and heterogeneous circular scenarios."""

import argparse
import json
from pathlib import Path

from wsn_tpc import config
from wsn_tpc.sim import monte_carlo, solve_scenario

CONFIGS = Path(__file__).parents[1] / "configs"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--configs", nargs="+", default=[CONFIGS / "assembly_line4.json", CONFIGS / "heterogeneous_circular3.json"])
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default="results/scenarios")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in map(Path, args.configs):
        cfg = config.load(path)
        summary = monte_carlo(solve_scenario(cfg), cfg, args.threads)
        (out / f"{path.stem}.json").write_text(json.dumps(summary.to_dict(), indent=1) + "\n")
        print(f"\n{path.stem}")
        print(f"{'link':>4} {'F':>6} {'mean p [uW]':>12} {'+-':>6} {'mean P':>8} {'+-':>6}")
        for l, spec in enumerate(cfg.systems):
            print(f"{l + 1:4d} {spec.F:6.2f} {summary.mean_p[l] * 1e6:12.2f} {summary.ci_p[l] * 1e6:6.2f} "
                  f"{summary.mean_P[l]:8.3f} {summary.ci_P[l]:6.3f}")


if __name__ == "__main__":
    main()
