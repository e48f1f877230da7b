"""Print the optimal PSR tables of the symmetric and heterogeneous two-system scenarios."""

import argparse
from pathlib import Path

import numpy as np

from wsn_tpc import config
from wsn_tpc.sim import solve_scenario

CONFIGS = Path(__file__).parents[1] / "configs"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--configs", nargs="+", default=[CONFIGS / "symmetric_pair.json", CONFIGS / "heterogeneous_pair.json"])
    parser.add_argument("--out", default="results/policies")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    np.set_printoptions(precision=2, linewidth=200)
    for path in map(Path, args.configs):
        policy = solve_scenario(config.load(path))
        table = policy.kappa_table()
        for l in range(table.shape[-1]):
            np.savetxt(out / f"{path.stem}_kappa{l + 1}.csv", table[..., l], delimiter=",", fmt="%.6g")
        mirrored = bool(np.array_equal(table[..., 0], table[..., 1].T))
        diag = np.diagonal(table[..., :2], axis1=0, axis2=1)
        print(f"\n{path.stem}: sweeps={policy.meta['sweeps']} converged={policy.meta['converged']} "
              f"mirror-symmetric={mirrored}")
        print("kappa on the diagonal P1 = P2, link 1:", diag[0])
        print("                                link 2:", diag[1])


if __name__ == "__main__":
    main()
