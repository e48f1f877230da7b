"""Discounted MDP over the per-system covariance grid and its approximate value iteration.

State: vector of scalar error covariances, one per system. Action: a feasible
PSR vector with its minimum-power allocation. A successor for each of the
``2**L`` delivery outcomes is computed with the Kalman covariance map; values
off the grid are read by multilinear interpolation with boundary clamping.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import watt_to_dbm
from .estimation import SystemModel, scalar_covariance_update
from .power_control import Action, ConfigError, FeasibleActionSet

# relative slack under which two Bellman values count as tied
TIE_RTOL = 1e-12


@dataclass
class Diagnostics:
    saturated: int = 0


diagnostics = Diagnostics()


@dataclass(frozen=True)
class StateGrid:
    levels: tuple[np.ndarray, ...]

    def __post_init__(self):
        levels = tuple(np.asarray(lv, dtype=float) for lv in self.levels)
        for lv in levels:
            if lv.ndim != 1 or lv.size < 1:
                raise ConfigError("each covariance grid needs at least one level")
            if lv[0] < 0 or np.any(np.diff(lv) <= 0):
                raise ConfigError("covariance levels must be non-negative and strictly increasing")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def uniform(cls, n_systems: int, count: int, high: float, low: float = 0.0) -> StateGrid:
        return cls(tuple(np.linspace(low, high, count) for _ in range(n_systems)))

    @property
    def n_systems(self) -> int:
        return len(self.levels)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(lv.size for lv in self.levels)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def points(self) -> np.ndarray:
        """(size, L) array of grid points in C order (system 1 varies slowest)."""
        mesh = np.meshgrid(*self.levels, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def nearest_index(self, S) -> int:
        """Flat index of the nearest grid point, clamped; midpoint ties go low."""
        idx = []
        for lv, x in zip(self.levels, np.asarray(S, dtype=float)):
            i = int(np.clip(np.searchsorted(lv, x), 1, max(lv.size - 1, 1)))
            if lv.size == 1:
                idx.append(0)
                continue
            lo, hi = lv[i - 1], lv[i]
            idx.append(i if x - lo > hi - x else i - 1)
        return int(np.ravel_multi_index(idx, self.shape))


@dataclass
class ValueFunction:
    values: np.ndarray
    grid: StateGrid
    sweeps: int = 0
    delta: float = float("nan")
    converged: bool = False


@dataclass
class Policy:
    action_index: np.ndarray
    actions: FeasibleActionSet
    grid: StateGrid
    meta: dict = field(default_factory=dict)

    def action_at(self, S) -> Action:
        return self.actions[int(self.action_index.ravel()[self.grid.nearest_index(S)])]

    def kappa_table(self) -> np.ndarray:
        """Array of shape ``grid.shape + (L,)`` holding the chosen PSR vector per grid point."""
        return self.actions.kappas[self.action_index]


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.9
    epsilon: float = 1e-4
    max_sweeps: int = 10_000
    update_mode: str = "in-place"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ConfigError("discount factor must lie in (0, 1]")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps must be at least 1")
        if self.update_mode not in ("in-place", "snapshot"):
            raise ConfigError(f"unknown update mode {self.update_mode!r}")


def _check_scalar(models):
    for m in models:
        if not m.is_scalar:
            raise ConfigError("the MDP solver handles scalar plants only")


def outcomes(L: int) -> np.ndarray:
    """All delivery outcome vectors, (2**L, L), in binary counting order."""
    return np.array(list(itertools.product((0, 1), repeat=L)), dtype=int)


def stage_cost(S, action: Action, models) -> float:
    S = np.asarray(S, dtype=float)
    distortion = sum(m.lam * m.theta[0, 0] * P for m, P in zip(models, S))
    return action.total_power + float(distortion)


def successors(S, models) -> np.ndarray:
    """Successor covariance vectors for every outcome, shape (..., 2**L, L)."""
    S = np.asarray(S, dtype=float)
    B = outcomes(len(models))
    cols = [scalar_covariance_update(S[..., None, l], B[:, l], m) for l, m in enumerate(models)]
    return np.stack(cols, axis=-1)


def reachable_states(S, models):
    _check_scalar(models)
    B = outcomes(len(models))
    return list(zip(map(tuple, B), successors(S, models)))


def transition_probability(kappa, b) -> float:
    kappa = np.asarray(kappa, dtype=float)
    b = np.asarray(b)
    return float(np.prod(np.where(b == 1, kappa, 1.0 - kappa)))


def transition_matrix(kappas) -> np.ndarray:
    """Outcome probabilities for each action, shape (M, 2**L)."""
    kappas = np.atleast_2d(np.asarray(kappas, dtype=float))
    B = outcomes(kappas.shape[1])
    per_link = np.where(B[None, :, :] == 1, kappas[:, None, :], 1.0 - kappas[:, None, :])
    return np.prod(per_link, axis=-1)


def _stencil(grid: StateGrid, S):
    """Corner flat indices and multilinear weights for points ``S`` (..., L).

    Returns ``(idx, w, saturated)`` with idx/w of shape (..., 2**L).
    """
    S = np.asarray(S, dtype=float)
    lead = S.shape[:-1]
    lo_idx, frac = [], []
    saturated = np.zeros(lead, dtype=bool)
    for l, lv in enumerate(grid.levels):
        x = S[..., l]
        saturated |= (x < lv[0]) | (x > lv[-1])
        x = np.clip(x, lv[0], lv[-1])
        if lv.size == 1:
            lo_idx.append(np.zeros(lead, dtype=int))
            frac.append(np.zeros(lead))
            continue
        i = np.clip(np.searchsorted(lv, x, side="right") - 1, 0, lv.size - 2)
        lo_idx.append(i)
        frac.append((x - lv[i]) / (lv[i + 1] - lv[i]))
    corners = outcomes(grid.n_systems)
    idx = np.zeros(lead + (len(corners),), dtype=np.int64)
    w = np.ones(lead + (len(corners),))
    strides = np.array([int(np.prod(grid.shape[l + 1:])) for l in range(grid.n_systems)])
    for c, corner in enumerate(corners):
        for l, up in enumerate(corner):
            step = up if grid.shape[l] > 1 else 0
            idx[..., c] += (lo_idx[l] + step) * strides[l]
            w[..., c] *= frac[l] if up else 1.0 - frac[l]
    return idx, w, saturated


def interpolate_value(J: ValueFunction, S) -> float:
    idx, w, sat = _stencil(J.grid, np.asarray(S, dtype=float))
    diagnostics.saturated += int(np.sum(sat))
    return float(np.sum(w * J.values.ravel()[idx]))


def _select(q_values, powers):
    """Row-wise argmin with ties broken by lowest total power, then lowest index."""
    q_values = np.atleast_2d(q_values)
    best = q_values.min(axis=1)
    tied = q_values <= best[:, None] + TIE_RTOL * np.maximum(1.0, np.abs(best))[:, None]
    masked = np.where(tied, powers[None, :], np.inf)
    least = masked.min(axis=1)
    cheapest = masked <= least[:, None] * (1 + TIE_RTOL) + 1e-300
    return best, np.argmax(cheapest, axis=1)


class Bellman:
    """Precomputed pieces of the value-iteration update for one problem instance."""

    def __init__(self, grid: StateGrid, actions: FeasibleActionSet, models, alpha: float):
        _check_scalar(models)
        if grid.n_systems != len(models):
            raise ConfigError(f"grid has {grid.n_systems} systems but {len(models)} models given")
        if len(actions) == 0:
            raise ConfigError("empty action set")
        self.grid = grid
        self.actions = actions
        self.models = list(models)
        self.alpha = alpha
        points = grid.points()
        weights = np.array([m.lam * m.theta[0, 0] for m in models])
        self.state_cost = points @ weights
        self.power = actions.powers.sum(axis=1)
        self.prob = transition_matrix(actions.kappas)
        self.idx, self.w, sat = _stencil(grid, successors(points, models))
        self.saturated = int(np.sum(sat))
        diagnostics.saturated += self.saturated

    def expected_next(self, values, states=slice(None)) -> np.ndarray:
        """Interpolated successor values per outcome, shape (n_states, 2**L)."""
        flat = values.ravel()
        return np.einsum("sbc,sbc->sb", self.w[states], flat[self.idx[states]])

    def q_values(self, values, states=slice(None)) -> np.ndarray:
        nxt = self.expected_next(values, states)
        return self.state_cost[states, None] + self.power[None, :] + self.alpha * nxt @ self.prob.T

    def apply(self, values, chunk: int = 1 << 22):
        """Snapshot update of every grid point; returns (new values, argmin indices)."""
        n = self.grid.size
        per = max(1, chunk // max(1, len(self.actions)))
        out = np.empty(n)
        arg = np.empty(n, dtype=np.int64)
        for start in range(0, n, per):
            sl = slice(start, min(n, start + per))
            out[sl], arg[sl] = _select(self.q_values(values, sl), self.power)
        return out.reshape(self.grid.shape), arg.reshape(self.grid.shape)


def target_update(J: ValueFunction, S, actions: FeasibleActionSet, models, alpha: float):
    """Bellman target at grid point ``S`` (coordinates or flat index)."""
    grid = J.grid
    if np.ndim(S) == 0:
        s = int(S)
    else:
        s = grid.nearest_index(S)
        if not np.allclose(grid.points()[s], S):
            raise ValueError("target_update needs a grid point")
    bell = Bellman(grid, actions, models, alpha)
    value, index = _select(bell.q_values(J.values, slice(s, s + 1)), bell.power)
    return float(value[0]), int(index[0])


def bellman_operator(values, grid: StateGrid, actions: FeasibleActionSet, models, alpha: float) -> np.ndarray:
    return Bellman(grid, actions, models, alpha).apply(np.asarray(values, dtype=float))[0]


def value_iteration(grid: StateGrid, actions: FeasibleActionSet, models, config: SolverConfig) -> ValueFunction:
    bell = Bellman(grid, actions, models, config.alpha)
    values = np.zeros(grid.shape)
    flat = values.ravel()
    delta = float("inf")
    sweeps = 0
    while sweeps < config.max_sweeps:
        sweeps += 1
        if config.update_mode == "snapshot":
            new = bell.apply(values)[0]
            delta = float(np.max(np.abs(new - values)))
            values = new
            flat = values.ravel()
        else:
            delta = 0.0
            for s in range(grid.size):
                old = flat[s]
                best, _ = _select(bell.q_values(values, slice(s, s + 1)), bell.power)
                flat[s] = best[0]
                delta = max(delta, abs(old - flat[s]))
        if delta <= config.epsilon:
            break
    return ValueFunction(values, grid, sweeps, float(delta), bool(delta <= config.epsilon))


def extract_policy(J: ValueFunction, grid: StateGrid, actions: FeasibleActionSet, models, alpha: float) -> Policy:
    bell = Bellman(grid, actions, models, alpha)
    _, arg = bell.apply(J.values)
    meta = {
        "alpha": alpha,
        "lambda": [m.lam for m in models],
        "sweeps": J.sweeps,
        "final_delta": J.delta,
        "converged": J.converged,
        "saturated_successors": bell.saturated,
    }
    return Policy(arg, actions, grid, meta)


def solve(grid: StateGrid, actions: FeasibleActionSet, models, config: SolverConfig) -> Policy:
    J = value_iteration(grid, actions, models, config)
    policy = extract_policy(J, grid, actions, models, config.alpha)
    policy.meta["epsilon"] = config.epsilon
    policy.meta["update_mode"] = config.update_mode
    return policy


def _finite_or_none(x):
    x = float(x)
    return x if np.isfinite(x) else None


def policy_to_dict(policy: Policy) -> dict:
    acts = policy.actions
    return {
        "grid": {"levels": [lv.tolist() for lv in policy.grid.levels]},
        "actions": [
            {
                "kappa": list(a.kappa),
                "power_watt": a.p.tolist(),
                "power_dbm": [_finite_or_none(v) for v in watt_to_dbm(a.p)],
            }
            for a in acts.actions
        ],
        "p_max_watt": acts.p_max,
        "psr_levels": [lv.tolist() for lv in acts.per_sensor_levels],
        "action_index": policy.action_index.ravel().tolist(),
        "solver": dict(policy.meta),
    }


def policy_from_dict(doc: dict) -> Policy:
    grid = StateGrid(tuple(np.asarray(lv) for lv in doc["grid"]["levels"]))
    actions = FeasibleActionSet(
        [Action(tuple(a["kappa"]), np.asarray(a["power_watt"], dtype=float)) for a in doc["actions"]],
        [np.asarray(lv) for lv in doc["psr_levels"]],
        doc["p_max_watt"],
    )
    index = np.asarray(doc["action_index"], dtype=np.int64)
    if index.size != grid.size or np.any((index < 0) | (index >= len(actions))):
        raise ConfigError("policy action table does not match its grid/action list")
    return Policy(index.reshape(grid.shape), actions, grid, dict(doc.get("solver", {})))
