"""Scenario assembly, closed-loop episodes, Monte Carlo aggregation and parameter sweeps.

Randomness: episode ``e`` of a run with master seed ``s`` draws from
``numpy.random.Generator(PCG64(seed_e))`` with
``seed_e = SeedSequence([s, e]).generate_state(1, uint64)[0]``. Within an
episode the draw order is: initial states (one normal per link), then per step
the delivery uniforms for all links, then state noise and measurement noise
for all links.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import config as cfgmod
from .channel import Topology, build_gain_matrix, watt_to_dbm
from .config import ScenarioConfig, TopologySpec
from .mdp import Policy, solve
from .power_control import ConfigError, enumerate_feasible_actions

TRACE_HEADER = ["k", "link", "P", "p_watt", "p_dbm", "kappa", "beta", "x", "xhat", "err"]


def reference_link(L: int) -> int:
    """0-based index of the circular-topology link placed at radius d1."""
    return 1 if L == 3 else math.ceil(L / 2) - 1


def build_topology(spec: TopologySpec) -> Topology:
    L = spec.L
    if spec.kind == "circular":
        radius = np.full(L, spec.d2, dtype=float)
        radius[reference_link(L)] = spec.d1
        angle = 2 * np.pi * np.arange(L) / L
        tx = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
        return Topology(tx, np.zeros((L, 2)))
    if spec.kind == "assembly_line":
        xs = np.arange(L) * spec.d2
        return Topology(np.stack([xs, np.zeros(L)], axis=1), np.stack([xs, np.full(L, spec.d1)], axis=1))
    if spec.kind == "explicit":
        topo = Topology(np.asarray(spec.tx_positions, float), np.asarray(spec.rx_positions, float))
        if topo.n_links != L:
            raise ConfigError(f"explicit topology has {topo.n_links} links, expected {L}")
        return topo
    raise ConfigError(f"unknown topology kind {spec.kind!r}")


def gains(cfg: ScenarioConfig) -> np.ndarray:
    return build_gain_matrix(build_topology(cfg.topology), cfg.propagation())


def action_set(cfg: ScenarioConfig):
    return enumerate_feasible_actions(
        cfg.psr_levels(), gains(cfg), cfg.noise_watt(), cfg.packet_bits, cfg.p_max, cfg.p_min
    )


def solve_scenario(cfg: ScenarioConfig) -> Policy:
    policy = solve(cfg.grid(), action_set(cfg), cfg.models(), cfg.solver)
    policy.meta["policy_hash"] = cfgmod.config_hash(cfg, include_simulation=False)
    return policy


@dataclass
class Trace:
    P: np.ndarray
    p: np.ndarray
    kappa: np.ndarray
    beta: np.ndarray
    x: np.ndarray
    xhat: np.ndarray

    @property
    def err(self) -> np.ndarray:
        return self.x - self.xhat

    @property
    def horizon(self) -> int:
        return self.P.shape[0]

    def rows(self):
        K, L = self.P.shape
        p_dbm = watt_to_dbm(self.p)
        err = self.err
        for k in range(K):
            for l in range(L):
                yield [k, l + 1, self.P[k, l], self.p[k, l], p_dbm[k, l], self.kappa[k, l],
                       int(self.beta[k, l]), self.x[k, l], self.xhat[k, l], err[k, l]]

    def write_csv(self, path, config_hash: str | None = None):
        with open(path, "w", newline="") as fh:
            if config_hash:
                fh.write(f"# config_sha1={config_hash}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for row in self.rows():
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def episode_seed(master_seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([master_seed, episode]).generate_state(1, np.uint64)[0])


def _scalar_params(models):
    get = lambda name: np.array([getattr(m, name)[0, 0] for m in models])
    return get("F"), get("H"), get("R1"), get("R2"), np.array([m.m0[0] for m in models]), get("R0")


def run_episode(policy: Policy, models, horizon: int, seed: int, force_beta: int | None = None) -> Trace:
    """Simulate one closed-loop episode under ``policy``.

    ``force_beta`` pins every delivery outcome to 0 or 1 (test hook); the
    uniforms are still drawn so the noise stream is unchanged.
    """
    L = len(models)
    if policy.grid.n_systems != L or policy.actions.kappas.shape[1] != L:
        raise ConfigError("policy does not match the scenario's system count")
    f, h, r1, r2, m0, r0 = _scalar_params(models)
    rng = np.random.Generator(np.random.PCG64(seed))

    x = m0 + np.sqrt(r0) * rng.standard_normal(L)
    xhat = m0.copy()
    P = r0.copy()
    out = {k: np.empty((horizon, L)) for k in ("P", "p", "kappa", "beta", "x", "xhat")}
    for k in range(horizon):
        action = policy.action_at(P)
        kappa = np.asarray(action.kappa)
        beta = (rng.random(L) < kappa).astype(float)
        if force_beta is not None:
            beta[:] = force_beta
        w = np.sqrt(r1) * rng.standard_normal(L)
        v = np.sqrt(r2) * rng.standard_normal(L)
        y = h * x + v
        for name, val in (("P", P), ("p", action.p), ("kappa", kappa), ("beta", beta), ("x", x), ("xhat", xhat)):
            out[name][k] = val
        gain = f * P * h / (h * h * P + r2)
        xhat = f * xhat + beta * gain * (y - h * xhat)
        P = f * f * P + r1 - beta * gain * h * P * f
        x = f * x + w
    return Trace(**out)


@dataclass
class MonteCarloSummary:
    mean_P: np.ndarray
    mean_p: np.ndarray
    ci_P: np.ndarray
    ci_p: np.ndarray
    sum_P: float
    sum_p: float
    ci_sum_P: float
    ci_sum_p: float
    runs: int
    delivery_rate: np.ndarray = field(default=None)
    mean_kappa: np.ndarray = field(default=None)

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "per_link": [
                {
                    "link": l + 1,
                    "mean_P": float(self.mean_P[l]),
                    "mean_p_watt": float(self.mean_p[l]),
                    "mean_p_dbm": float(watt_to_dbm(self.mean_p[l])) if self.mean_p[l] > 0 else None,
                    "ci_P": float(self.ci_P[l]),
                    "ci_p_watt": float(self.ci_p[l]),
                    "delivery_rate": float(self.delivery_rate[l]),
                    "mean_kappa": float(self.mean_kappa[l]),
                }
                for l in range(self.mean_P.size)
            ],
            "network": {
                "sum_P": self.sum_P,
                "sum_p_watt": self.sum_p,
                "ci_sum_P": self.ci_sum_P,
                "ci_sum_p_watt": self.ci_sum_p,
            },
        }


def _half_width(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[0]
    if n < 2:
        return np.zeros(samples.shape[1:])
    return 1.96 * samples.std(axis=0, ddof=1) / np.sqrt(n)


def summarize(traces: list[Trace], burn_in: int = 0) -> MonteCarloSummary:
    P = np.array([t.P[burn_in:].mean(axis=0) for t in traces])
    p = np.array([t.p[burn_in:].mean(axis=0) for t in traces])
    mean_P, mean_p = P.mean(axis=0), p.mean(axis=0)
    return MonteCarloSummary(
        mean_P=mean_P,
        mean_p=mean_p,
        ci_P=_half_width(P),
        ci_p=_half_width(p),
        sum_P=float(mean_P.sum()),
        sum_p=float(mean_p.sum()),
        ci_sum_P=float(_half_width(P.sum(axis=1)[:, None])[0]),
        ci_sum_p=float(_half_width(p.sum(axis=1)[:, None])[0]),
        runs=len(traces),
        delivery_rate=np.mean([t.beta[burn_in:].mean(axis=0) for t in traces], axis=0),
        mean_kappa=np.mean([t.kappa[burn_in:].mean(axis=0) for t in traces], axis=0),
    )


def monte_carlo(policy: Policy, cfg: ScenarioConfig, threads: int = 1, keep_traces: bool = False):
    """Run ``cfg.simulation.runs`` episodes; returns the summary, plus traces if asked."""
    sim = cfg.simulation
    models = cfg.models()
    seeds = [episode_seed(sim.seed, e) for e in range(sim.runs)]
    job = lambda s: run_episode(policy, models, sim.horizon, s)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            traces = list(pool.map(job, seeds))
    else:
        traces = [job(s) for s in seeds]
    summary = summarize(traces, sim.burn_in)
    return (summary, traces) if keep_traces else summary


SWEEP_AXES = ("lambda", "alpha", "d2_over_d1")


def scenario_at(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "lambda":
        systems = [cfgmod.SystemSpec(**{**s.__dict__, "lam": None}) for s in cfg.systems]
        return cfg.replace(lam=value, systems=systems)
    if axis == "alpha":
        return cfg.replace(solver=cfgmod.SolverConfig(value, cfg.solver.epsilon, cfg.solver.max_sweeps, cfg.solver.update_mode))
    if axis == "d2_over_d1":
        topo = cfgmod.TopologySpec(**{**cfg.topology.__dict__, "d2": value * cfg.topology.d1})
        return cfg.replace(topology=topo)
    raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")


@dataclass
class SweepRow:
    value: float
    status: str
    summary: MonteCarloSummary | None = None
    meta: dict = field(default_factory=dict)


def sweep(cfg: ScenarioConfig, axis: str, values, threads: int = 1) -> list[SweepRow]:
    if not len(values):
        raise ConfigError("sweep needs at least one value")
    rows = []
    for value in values:
        try:
            point = scenario_at(cfg, axis, float(value))
            policy = solve_scenario(point)
        except (ConfigError, ValueError) as exc:
            rows.append(SweepRow(float(value), f"failed: {exc}"))
            continue
        summary = monte_carlo(policy, point, threads)
        status = "ok" if policy.meta["converged"] else "not-converged"
        rows.append(SweepRow(float(value), status, summary, policy.meta))
    return rows
