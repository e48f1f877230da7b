"""LTI plants and the Kalman filter over a packet-erasure link.

The gain is in predictor form, ``K = F P H' (H P H' + R2)^-1``, and the
covariance update folds prediction and correction into one step gated by the
delivery indicator ``beta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import DomainError


class ConvergenceError(RuntimeError):
    pass


def _mat(a) -> np.ndarray:
    return np.atleast_2d(np.asarray(a, dtype=float))


def _check_spd(name, a):
    if not np.allclose(a, a.T, rtol=1e-10, atol=1e-12):
        raise DomainError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(a)) <= 0:
        raise DomainError(f"{name} must be positive definite")


@dataclass(frozen=True)
class SystemModel:
    """One plant ``x' = F x + w``, ``y = H x + v`` and its cost weights.

    Scalars are promoted to 1x1 matrices. ``lam`` trades distortion against
    transmit power in the stage cost.
    """

    F: np.ndarray
    H: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    m0: np.ndarray = None
    R0: np.ndarray = None
    theta: np.ndarray = None
    lam: float = 0.01

    def __post_init__(self):
        F = _mat(self.F)
        n = F.shape[0]
        if F.shape != (n, n):
            raise DomainError("F must be square")
        H = _mat(self.H)
        if H.shape[1] != n:
            raise DomainError(f"H must have {n} columns")
        R1, R2 = _mat(self.R1), _mat(self.R2)
        m0 = np.zeros(n) if self.m0 is None else np.atleast_1d(np.asarray(self.m0, dtype=float))
        R0 = np.eye(n) if self.R0 is None else _mat(self.R0)
        theta = np.eye(n) if self.theta is None else _mat(self.theta)
        for name, a, size in (("R1", R1, n), ("R2", R2, H.shape[0]), ("R0", R0, n), ("theta", theta, n)):
            if a.shape != (size, size):
                raise DomainError(f"{name} must be {size}x{size}")
            _check_spd(name, a)
        if m0.shape != (n,):
            raise DomainError(f"m0 must have length {n}")
        if self.lam < 0:
            raise DomainError("lambda must be non-negative")
        obs = np.vstack([H @ np.linalg.matrix_power(F, k) for k in range(n)])
        if np.linalg.matrix_rank(obs) < n:
            raise DomainError("(F, H) is not observable")
        for name, a in (("F", F), ("H", H), ("R1", R1), ("R2", R2), ("m0", m0), ("R0", R0), ("theta", theta)):
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.F.shape == (1, 1) and self.H.shape == (1, 1)


def _check_psd(P):
    if np.min(np.linalg.eigvalsh((P + P.T) / 2)) < -1e-12 * max(1.0, np.max(np.abs(P))):
        raise DomainError("covariance must be positive semidefinite")


def kalman_gain(P, model: SystemModel) -> np.ndarray:
    P = _mat(P)
    _check_psd(P)
    S = model.H @ P @ model.H.T + model.R2
    # K = F P H' S^-1, via the SPD solve S K' = H P F'
    return np.linalg.solve(S, model.H @ P @ model.F.T).T


def covariance_update(P, beta: int, model: SystemModel) -> np.ndarray:
    P = _mat(P)
    F = model.F
    nxt = F @ P @ F.T + model.R1
    if beta:
        K = kalman_gain(P, model)
        nxt = nxt - K @ model.H @ P @ F.T
    else:
        _check_psd(P)
    return (nxt + nxt.T) / 2


def scalar_covariance_update(P, beta, model: SystemModel):
    """Vectorized covariance update for a scalar plant; ``P`` and ``beta`` broadcast."""
    f, h = model.F[0, 0], model.H[0, 0]
    r1, r2 = model.R1[0, 0], model.R2[0, 0]
    P = np.asarray(P, dtype=float)
    open_loop = f * f * P + r1
    correction = (f * P * h) ** 2 / (h * h * P + r2)
    return open_loop - np.asarray(beta) * correction


def estimate_update(xhat, y, beta: int, P, model: SystemModel) -> np.ndarray:
    xhat = np.atleast_1d(np.asarray(xhat, dtype=float))
    pred = model.F @ xhat
    if not beta:
        return pred
    if y is None:
        raise ValueError("a delivered packet needs a measurement")
    K = kalman_gain(P, model)
    return pred + K @ (np.atleast_1d(y) - model.H @ xhat)


def plant_step(x, model: SystemModel, rng: np.random.Generator):
    """Advance the plant once; returns ``(x_next, y)`` where ``y`` measures the current ``x``.

    Noise is drawn state-noise first, then measurement noise.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = _gaussian(rng, model.R1)
    v = _gaussian(rng, model.R2)
    return model.F @ x + w, model.H @ x + v


def _gaussian(rng, cov):
    chol = np.linalg.cholesky(cov)
    return chol @ rng.standard_normal(cov.shape[0])


def initial_state(model: SystemModel, rng: np.random.Generator) -> np.ndarray:
    return model.m0 + _gaussian(rng, model.R0)


def distortion(states, estimates, theta) -> float:
    """Realized quadratic distortion ``sum_k ||x_k - xhat_k||^2_theta``."""
    states = np.asarray(states, dtype=float)
    estimates = np.asarray(estimates, dtype=float)
    if states.shape != estimates.shape:
        raise ValueError(f"length mismatch: {states.shape} vs {estimates.shape}")
    err = (states - estimates).reshape(states.shape[0], -1)
    theta = _mat(theta)
    return float(np.einsum("ki,ij,kj->", err, theta, err))


def riccati_fixed_point(model: SystemModel, tol: float = 1e-12, max_iter: int = 100_000) -> np.ndarray:
    P = model.R0
    for _ in range(max_iter):
        nxt = covariance_update(P, 1, model)
        if np.max(np.abs(nxt - P)) < tol:
            return nxt
        P = nxt
    raise ConvergenceError(f"Riccati iteration did not settle within {max_iter} steps")
