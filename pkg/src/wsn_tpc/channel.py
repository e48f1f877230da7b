"""Average wireless propagation: path loss, shadowing mean, SINR and the PSR mapping.

Gains are linear power ratios, powers are in watts. Entry ``(l, m)`` of a
gain matrix is the gain from transmitter ``m`` into receiver ``l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

SPEED_OF_LIGHT = 299_792_458.0
# q must stay strictly below one
GAIN_CEILING = 1.0 - 1e-12


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


@dataclass
class Diagnostics:
    clamped_gains: int = 0


# process-wide counter, read by reports
diagnostics = Diagnostics()


@dataclass(frozen=True)
class PropagationParams:
    frequency: float = 2480e6
    pathloss_exponent: float = 3.3
    shadowing_variance_db: float = 2.75
    reference_distance: float = 1.0
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.frequency <= 0:
            raise DomainError("frequency must be positive")
        if self.pathloss_exponent <= 0:
            raise DomainError("path-loss exponent must be positive")
        if self.reference_distance <= 0:
            raise DomainError("reference distance must be positive")
        if self.shadowing_variance_db < 0:
            raise DomainError("shadowing variance must be non-negative")


@dataclass(frozen=True)
class Topology:
    tx_positions: np.ndarray
    rx_positions: np.ndarray

    def __post_init__(self):
        tx = np.atleast_2d(np.asarray(self.tx_positions, dtype=float))
        rx = np.atleast_2d(np.asarray(self.rx_positions, dtype=float))
        if tx.shape != rx.shape or tx.ndim != 2 or tx.shape[1] != 2 or tx.shape[0] < 1:
            raise DomainError(f"need matching (L, 2) coordinate arrays, got {tx.shape} and {rx.shape}")
        object.__setattr__(self, "tx_positions", tx)
        object.__setattr__(self, "rx_positions", rx)

    @property
    def n_links(self) -> int:
        return self.tx_positions.shape[0]

    def distances(self) -> np.ndarray:
        """Matrix of distances, entry (l, m) between transmitter m and receiver l."""
        diff = self.rx_positions[:, None, :] - self.tx_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


def dbm_to_watt(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(p_watt):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(p_watt, dtype=float)) + 30.0


def path_loss(d: float, params: PropagationParams) -> float:
    """Log-distance path loss ``(c0 / (4 pi f d0))**2 * (d0 / d)**eta``."""
    if not d > 0:
        raise DomainError(f"distance must be positive, got {d}")
    free_space = (params.speed_of_light / (4.0 * math.pi * params.frequency * params.reference_distance)) ** 2
    return free_space * (params.reference_distance / d) ** params.pathloss_exponent


def shadowing_mean(shadowing_variance_db: float) -> float:
    """Mean of a log-normal variable whose dB-domain variance is given."""
    if shadowing_variance_db < 0:
        raise DomainError("shadowing variance must be non-negative")
    var_ln = (math.log(10.0) / 10.0) ** 2 * shadowing_variance_db
    return math.exp(var_ln / 2.0)


def channel_coefficient(d: float, params: PropagationParams) -> float:
    q = path_loss(d, params) / shadowing_mean(params.shadowing_variance_db)
    if q >= GAIN_CEILING:
        diagnostics.clamped_gains += 1
        q = GAIN_CEILING
    return q


def build_gain_matrix(topology: Topology, params: PropagationParams) -> np.ndarray:
    dist = topology.distances()
    if np.any(dist <= 0):
        raise DomainError("a transmitter coincides with a receiver")
    L = topology.n_links
    q = np.empty((L, L))
    for l in range(L):
        for m in range(L):
            q[l, m] = channel_coefficient(dist[l, m], params)
    return q


def sinr(p, q, noise, link: int) -> float:
    """SINR of ``link`` (0-based) under power vector ``p``.

    Interference sums ``p_m * q[m, link]`` over the other transmitters. This
    index order pairs with :func:`wsn_tpc.power_control.normalized_gain_matrix`;
    both agree whenever ``q[l, l] * q[l, m] == q[m, l] * q[m, m]``, which the
    circular and assembly-line layouts satisfy.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    noise = np.broadcast_to(np.asarray(noise, dtype=float), p.shape)
    others = np.arange(p.size) != link
    interference = np.dot(p[others], q[others, link])
    return p[link] * q[link, link] / (interference + noise[link])


def q_function(x):
    """Gaussian tail probability P[N(0, 1) > x]."""
    return ndtr(-np.asarray(x, dtype=float))


def q_inverse(t):
    return -ndtri(np.asarray(t, dtype=float))


def psr_from_sinr(gamma, W: int):
    """Packet success ratio ``[1 - Q(4 sqrt(gamma))]**W`` for a W-bit packet."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise DomainError("SINR must be non-negative")
    bit_error = q_function(4.0 * np.sqrt(gamma))
    kappa = np.exp(W * np.log1p(-bit_error))
    return kappa if kappa.ndim else float(kappa)


def sinr_from_psr(kappa, W: int):
    """Smallest SINR achieving PSR ``kappa``; zero below the floor ``0.5**W``."""
    kappa = np.asarray(kappa, dtype=float)
    if np.any((kappa <= 0) | (kappa >= 1)):
        raise DomainError("PSR must lie strictly inside (0, 1)")
    # 1 - kappa**(1/W), accurate for kappa close to 1
    bit_error = -np.expm1(np.log(kappa) / W)
    x = q_inverse(np.minimum(bit_error, 0.5))
    gamma = np.where(bit_error < 0.5, x * x / 16.0, 0.0)
    return gamma if gamma.ndim else float(gamma)
