"""``wsn-tpc`` command line: feasibility, solve, simulate, sweep.

Exit codes: 0 success, 2 usage or configuration error, 3 domain error or
infeasibility.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import channel, config, mdp, power_control, sim
from .channel import DomainError
from .power_control import ConfigError, EmptyActionSet, Infeasible

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 2, 3


class UsageError(Exception):
    pass


def _dump_json(doc, path: Path):
    path.write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n")


def _reset_diagnostics():
    channel.diagnostics = channel.Diagnostics()
    power_control.diagnostics = power_control.Diagnostics()
    mdp.diagnostics = mdp.Diagnostics()


def _diagnostics():
    return {
        "clamped_gains": channel.diagnostics.clamped_gains,
        "allocations_below_hardware_floor": power_control.diagnostics.below_hardware_floor,
        "saturated_successors": mdp.diagnostics.saturated,
    }


def _parse_fixed(items, L):
    fixed = {}
    for item in items or []:
        try:
            link, value = item.split("=")
            link, value = int(link), float(value)
        except ValueError:
            raise UsageError(f"--fixed expects LINK=KAPPA, got {item!r}") from None
        if not 1 <= link <= L:
            raise UsageError(f"--fixed link {link} outside 1..{L}")
        fixed[link - 1] = value
    return fixed


def cmd_feasibility(cfg, args, out: Path) -> int:
    if cfg.L < 2:
        raise UsageError("a feasibility slice needs at least two links")
    fixed = _parse_fixed(args.fixed, cfg.L)
    if cfg.L - len(fixed) != 2:
        raise UsageError(f"fix all but two links with --fixed (L={cfg.L}, fixed {len(fixed)})")
    rows = power_control.feasibility_region_slice(
        fixed, args.resolution, sim.gains(cfg), cfg.noise_watt(), cfg.packet_bits, cfg.p_max
    )
    path = out / "feasibility.csv"
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_sha1={config.config_hash(cfg)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kappa_i", "kappa_j", "feasible"])
        for a, b, ok in rows:
            w.writerow([repr(a), repr(b), int(ok)])
    return EXIT_OK


def cmd_solve(cfg, args, out: Path) -> int:
    policy = sim.solve_scenario(cfg)
    doc = {
        "config_hash": config.config_hash(cfg),
        "policy_hash": policy.meta["policy_hash"],
        "config": config.to_dict(cfg),
        **mdp.policy_to_dict(policy),
        "diagnostics": _diagnostics(),
    }
    _dump_json(doc, out / "policy.json")
    if not policy.meta["converged"]:
        print(f"warning: value iteration stopped after {policy.meta['sweeps']} sweeps "
              f"with delta={policy.meta['final_delta']:.3g}", file=sys.stderr)
    return EXIT_OK


def _load_policy(cfg, args) -> mdp.Policy:
    if not args.policy:
        raise UsageError("simulate needs --policy")
    path = Path(args.policy)
    if not path.is_file():
        raise UsageError(f"policy file {path} not found")
    doc = json.loads(path.read_text())
    expected = config.config_hash(cfg, include_simulation=False)
    if doc.get("policy_hash") != expected:
        msg = f"policy {path} was solved for a different configuration"
        if not args.force:
            raise UsageError(msg + " (use --force to proceed)")
        print("warning: " + msg, file=sys.stderr)
    return mdp.policy_from_dict(doc)


def cmd_simulate(cfg, args, out: Path) -> int:
    policy = _load_policy(cfg, args)
    summary, traces = sim.monte_carlo(policy, cfg, args.threads, keep_traces=True)
    digest = config.config_hash(cfg)
    if args.episodes_traces:
        for e, trace in enumerate(traces):
            trace.write_csv(out / f"trace_{e:04d}.csv", digest)
    doc = {
        "config_hash": digest,
        "policy_hash": policy.meta.get("policy_hash"),
        "config": config.to_dict(cfg),
        "seed_rule": "episode e uses PCG64(SeedSequence([seed, e]).generate_state(1, uint64)[0])",
        "summary": summary.to_dict(),
        "diagnostics": _diagnostics(),
    }
    _dump_json(doc, out / "summary.json")
    return EXIT_OK


def cmd_sweep(cfg, args, out: Path) -> int:
    if args.axis not in sim.SWEEP_AXES:
        raise UsageError(f"--axis must be one of {', '.join(sim.SWEEP_AXES)}")
    if not args.values:
        raise UsageError("--values is required")
    try:
        values = [float(v) for v in args.values.split(",")]
    except ValueError:
        raise UsageError(f"--values must be a comma-separated list of numbers, got {args.values!r}") from None
    rows = sim.sweep(cfg, args.axis, values, args.threads)
    L = cfg.L
    header = ["value", "status", "sum_P", "ci_sum_P", "sum_p_watt", "ci_sum_p_watt"]
    header += [f"P_{l + 1}" for l in range(L)] + [f"p_watt_{l + 1}" for l in range(L)]
    header += ["sweeps", "converged"]
    with open(out / f"sweep_{args.axis}.csv", "w", newline="") as fh:
        fh.write(f"# config_sha1={config.config_hash(cfg)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            s = r.summary
            if s is None:
                w.writerow([repr(r.value), r.status] + [""] * (len(header) - 2))
                continue
            w.writerow(
                [repr(r.value), r.status, repr(s.sum_P), repr(s.ci_sum_P), repr(s.sum_p), repr(s.ci_sum_p)]
                + [repr(float(v)) for v in s.mean_P] + [repr(float(v)) for v in s.mean_p]
                + [r.meta["sweeps"], int(r.meta["converged"])]
            )
    if not any(r.summary is not None for r in rows):
        print("error: every sweep point failed", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


COMMANDS = {
    "feasibility": cmd_feasibility,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsn-tpc", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="scenario JSON document")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--seed", type=int, help="override simulation.seed (unsigned 64-bit)")
    parser.add_argument("--policy", help="policy JSON written by `solve`")
    parser.add_argument("--axis", help="sweep axis: lambda, alpha or d2_over_d1")
    parser.add_argument("--values", help="comma-separated sweep values")
    parser.add_argument("--episodes-traces", action="store_true", help="write one trace CSV per episode")
    parser.add_argument("--force", action="store_true", help="simulate even if the policy hash differs")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for Monte Carlo episodes")
    parser.add_argument("--fixed", action="append", metavar="LINK=KAPPA",
                        help="fix a link's PSR for the feasibility slice (1-based, repeatable)")
    parser.add_argument("--resolution", type=int, default=200, help="feasibility grid points per axis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _reset_diagnostics()
    try:
        cfg = config.load(args.config)
        if args.seed is not None:
            cfg = cfg.replace(simulation=config.SimSpec(**{**cfg.simulation.__dict__, "seed": args.seed}))
        if args.threads < 1 or args.resolution < 1:
            raise UsageError("--threads and --resolution must be positive")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args, out)
    except (EmptyActionSet, DomainError, Infeasible) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (UsageError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
