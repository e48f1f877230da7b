"""Minimum-power allocation for coupled SINR targets and the discretized PSR region."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import DomainError, sinr_from_psr


class Infeasible(Exception):
    """No non-negative power vector meets the requested targets."""


class ConfigError(ValueError):
    pass


class EmptyActionSet(ConfigError):
    """The PSR grid has no feasible combination under the power limit."""


@dataclass
class Diagnostics:
    below_hardware_floor: int = 0


diagnostics = Diagnostics()


@dataclass(frozen=True)
class Action:
    kappa: tuple[float, ...]
    p: np.ndarray = field(compare=False)

    @property
    def total_power(self) -> float:
        return float(np.sum(self.p))


@dataclass
class FeasibleActionSet:
    actions: list[Action]
    per_sensor_levels: list[np.ndarray]
    p_max: float

    def __len__(self):
        return len(self.actions)

    def __getitem__(self, i):
        return self.actions[i]

    @property
    def kappas(self) -> np.ndarray:
        """(M, L) array of PSR vectors."""
        return np.array([a.kappa for a in self.actions], dtype=float)

    @property
    def powers(self) -> np.ndarray:
        """(M, L) array of per-link powers in watts."""
        return np.array([a.p for a in self.actions], dtype=float)


def normalized_gain_matrix(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    direct = np.diag(q)
    if np.any(direct <= 0):
        raise DomainError("direct-link gains must be positive")
    T = q / direct[None, :]
    np.fill_diagonal(T, 0.0)
    return T


def normalized_interference(gamma, noise, q) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    noise = np.broadcast_to(np.asarray(noise, dtype=float), gamma.shape)
    return noise * gamma / np.diag(np.asarray(q, dtype=float))


def spectral_radius(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def foschini_miljanic(gamma, q, noise) -> np.ndarray:
    """Componentwise-minimal powers solving ``(I - D(gamma) T) p = u``.

    Raises :class:`Infeasible` when ``rho(D(gamma) T) >= 1``, when the system
    is numerically singular, or when the solution has a negative entry.
    """
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise DomainError("SINR targets must be non-negative")
    T = normalized_gain_matrix(q)
    DT = gamma[:, None] * T
    if spectral_radius(DT) >= 1.0:
        raise Infeasible("spectral radius of D(gamma) T is not below one")
    A = np.eye(gamma.size) - DT
    u = normalized_interference(gamma, noise, q)
    try:
        p = np.linalg.solve(A, u)
    except np.linalg.LinAlgError as exc:
        raise Infeasible("singular power-control system") from exc
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise Infeasible("no non-negative solution")
    return p


def is_feasible(gamma, q, noise, p_max: float) -> bool:
    try:
        p = foschini_miljanic(gamma, q, noise)
    except Infeasible:
        return False
    return bool(np.all(p <= p_max))


def psi(kappa, q, noise, W: int, p_max: float) -> np.ndarray:
    """Powers realizing the PSR vector ``kappa``; raises Infeasible beyond ``p_max``."""
    gamma = sinr_from_psr(np.asarray(kappa, dtype=float), W)
    p = foschini_miljanic(np.atleast_1d(gamma), q, noise)
    if np.any(p > p_max):
        raise Infeasible(f"allocation exceeds p_max={p_max:g} W")
    return p


def uniform_levels(count: int, low: float | None = None, high: float | None = None) -> np.ndarray:
    """``count`` evenly spaced PSR levels, by default strictly inside (0, 1)."""
    if count < 1:
        raise ConfigError("need at least one PSR level")
    if low is None and high is None:
        return np.arange(1, count + 1) / (count + 1)
    low = 1.0 / (count + 1) if low is None else low
    high = count / (count + 1) if high is None else high
    return np.linspace(low, high, count)


def enumerate_feasible_actions(levels, q, noise, W: int, p_max: float, p_min: float | None = None) -> FeasibleActionSet:
    """Filter the Cartesian product of per-sensor PSR levels down to feasible actions.

    ``levels`` is either one array shared by all sensors or a list of arrays,
    one per sensor. Order is lexicographic in kappa. ``p_min`` only feeds the
    hardware-floor diagnostic; allocations are never raised to it.
    """
    L = np.asarray(q).shape[0]
    if np.ndim(levels[0]) == 0:
        levels = [np.asarray(levels, dtype=float)] * L
    levels = [np.asarray(lv, dtype=float) for lv in levels]
    if len(levels) != L:
        raise ConfigError(f"expected {L} level arrays, got {len(levels)}")
    for lv in levels:
        if np.any((lv <= 0) | (lv >= 1)) or np.any(np.diff(lv) <= 0):
            raise ConfigError("PSR levels must be strictly increasing inside (0, 1)")

    actions = []
    for kappa in itertools.product(*levels):
        try:
            p = psi(kappa, q, noise, W, p_max)
        except Infeasible:
            continue
        if p_min is not None:
            diagnostics.below_hardware_floor += int(np.sum((p > 0) & (p < p_min)))
        actions.append(Action(tuple(float(k) for k in kappa), p))
    if not actions:
        raise EmptyActionSet(
            f"no feasible PSR combination among {np.prod([len(lv) for lv in levels])} candidates; "
            f"lower the PSR grid or raise p_max ({p_max:g} W)"
        )
    return FeasibleActionSet(actions, levels, p_max)


def feasibility_region_slice(fixed: dict[int, float], resolution: int, q, noise, W: int, p_max: float):
    """Feasibility of a 2-D slice through the PSR region.

    ``fixed`` maps 0-based link index to a PSR value; exactly two links must
    be left free. Returns rows ``(kappa_i, kappa_j, feasible)`` with kappa_i
    varying slowest.
    """
    L = np.asarray(q).shape[0]
    free = [l for l in range(L) if l not in fixed]
    if len(free) != 2:
        raise ConfigError(f"need exactly two free links, got {len(free)}")
    i, j = free
    axis = uniform_levels(resolution)
    gamma = np.zeros(L)
    for l, v in fixed.items():
        gamma[l] = sinr_from_psr(v, W)
    axis_gamma = sinr_from_psr(axis, W)

    rows = []
    for a, ga in zip(axis, axis_gamma):
        for b, gb in zip(axis, axis_gamma):
            gamma[i], gamma[j] = ga, gb
            rows.append((float(a), float(b), is_feasible(gamma, q, noise, p_max)))
    return rows
