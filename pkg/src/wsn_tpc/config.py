"""Scenario configuration: dataclasses, JSON (de)serialization, provenance hash.

Power quantities are dBm and frequency is MHz in the JSON document; the
loaders convert to watts and hertz once, here.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .channel import PropagationParams, dbm_to_watt
from .estimation import SystemModel
from .mdp import SolverConfig, StateGrid
from .power_control import ConfigError, uniform_levels


@dataclass
class TopologySpec:
    kind: str = "circular"
    L: int = 3
    d1: float = 10.0
    d2: float = 10.0
    tx_positions: list | None = None
    rx_positions: list | None = None

    def __post_init__(self):
        if self.kind not in ("circular", "assembly_line", "explicit"):
            raise ConfigError(f"unknown topology kind {self.kind!r}")
        if self.L < 1:
            raise ConfigError("L must be at least 1")
        if self.d1 <= 0 or self.d2 <= 0:
            raise ConfigError("d1 and d2 must be positive")
        if self.kind == "explicit" and (self.tx_positions is None or self.rx_positions is None):
            raise ConfigError("explicit topology needs tx_positions and rx_positions")


@dataclass
class SystemSpec:
    F: float | list = 1.01
    H: float | list = 0.3
    R1: float | list = 0.4
    R2: float | list = 1.1
    m0: float | list = 0.0
    R0: float | list = 1.0
    theta: float | list | None = None
    # None inherits the scenario-wide lambda
    lam: float | None = None


@dataclass
class GridSpec:
    levels: int = 10
    low: float = 0.0
    high: float = 20.0


@dataclass
class ActionGridSpec:
    levels: int = 8
    low: float | None = None
    high: float | None = None


@dataclass
class SimSpec:
    horizon: int = 500
    runs: int = 50
    seed: int = 0
    burn_in: int = 0

    def __post_init__(self):
        if self.horizon < 1 or self.runs < 1:
            raise ConfigError("horizon and runs must be at least 1")
        if not 0 <= self.burn_in < self.horizon:
            raise ConfigError("burn_in must lie in [0, horizon)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


@dataclass
class ScenarioConfig:
    topology: TopologySpec = field(default_factory=TopologySpec)
    frequency_mhz: float = 2480.0
    pathloss_exponent: float = 3.3
    shadowing_variance_db: float = 2.75
    reference_distance: float = 1.0
    systems: list[SystemSpec] = field(default_factory=lambda: [SystemSpec() for _ in range(3)])
    lam: float = 0.01
    packet_bits: int = 120
    noise_dbm: float | list = -100.0
    p_max_dbm: float = 7.0
    p_min_dbm: float = -24.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    state_grid: GridSpec = field(default_factory=GridSpec)
    action_grid: ActionGridSpec = field(default_factory=ActionGridSpec)
    simulation: SimSpec = field(default_factory=SimSpec)

    def __post_init__(self):
        if len(self.systems) != self.topology.L:
            raise ConfigError(f"{len(self.systems)} systems for {self.topology.L} links")
        if self.packet_bits < 1:
            raise ConfigError("packet_bits must be at least 1")
        if self.lam < 0:
            raise ConfigError("lambda must be non-negative")
        if np.ndim(self.noise_dbm) and len(self.noise_dbm) != self.topology.L:
            raise ConfigError("noise_dbm list must have one entry per link")

    @property
    def L(self) -> int:
        return self.topology.L

    def propagation(self) -> PropagationParams:
        return PropagationParams(
            frequency=self.frequency_mhz * 1e6,
            pathloss_exponent=self.pathloss_exponent,
            shadowing_variance_db=self.shadowing_variance_db,
            reference_distance=self.reference_distance,
        )

    def noise_watt(self) -> np.ndarray:
        return np.broadcast_to(dbm_to_watt(self.noise_dbm), (self.L,)).copy()

    @property
    def p_max(self) -> float:
        return float(dbm_to_watt(self.p_max_dbm))

    @property
    def p_min(self) -> float:
        return float(dbm_to_watt(self.p_min_dbm))

    def models(self) -> list[SystemModel]:
        return [
            SystemModel(s.F, s.H, s.R1, s.R2, s.m0, s.R0, s.theta, self.lam if s.lam is None else s.lam)
            for s in self.systems
        ]

    def grid(self) -> StateGrid:
        g = self.state_grid
        return StateGrid.uniform(self.L, g.levels, g.high, g.low)

    def psr_levels(self) -> np.ndarray:
        a = self.action_grid
        return uniform_levels(a.levels, a.low, a.high)

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(copy.deepcopy(self), **changes)


_NESTED = {
    "topology": TopologySpec,
    "solver": SolverConfig,
    "state_grid": GridSpec,
    "action_grid": ActionGridSpec,
    "simulation": SimSpec,
}
# JSON spells a few fields differently from the Python attributes
_ALIASES = {"lambda": "lam"}


def _build(cls, doc, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in doc.items():
        attr = _ALIASES.get(key, key)
        if attr not in names:
            raise ConfigError(f"{where}: unknown key {key!r}")
        kwargs[attr] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc = dict(doc)
    for key, cls in _NESTED.items():
        if key in doc:
            doc[key] = _build(cls, doc[key], key)
    if "systems" in doc:
        if not isinstance(doc["systems"], list):
            raise ConfigError("systems: expected a list")
        doc["systems"] = [_build(SystemSpec, s, f"systems[{i}]") for i, s in enumerate(doc["systems"])]
    return _build(ScenarioConfig, doc, "config")


def _json_key(name):
    return next((k for k, v in _ALIASES.items() if v == name), name)


def to_dict(cfg: ScenarioConfig) -> dict:
    def conv(obj):
        if dataclasses.is_dataclass(obj):
            return {_json_key(f.name): conv(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, list):
            return [conv(v) for v in obj]
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return obj

    return conv(cfg)


def load(path) -> ScenarioConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(doc)


def canonical_json(cfg: ScenarioConfig) -> str:
    return json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: ScenarioConfig, include_simulation: bool = True) -> str:
    """Git blob hash (SHA-1 over ``blob <len>\\0`` + content) of the canonical config.

    With ``include_simulation=False`` the simulation block is left out, so the
    hash identifies everything a solved policy depends on.
    """
    doc = to_dict(cfg)
    if not include_simulation:
        del doc["simulation"]
    body = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()
