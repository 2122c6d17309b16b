"""Run configuration (JSON) and seed splitting.

See ``configs/default.json`` for a complete document; every section and
key is optional and falls back to the defaults below.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import SynthPcmParams, linear_voltage_grid, uniform_resistance_grid
from .errors import ConfigError
from .levels import AnnealSchedule


@dataclass
class GridConfig:
    v_min: float = 0.5
    v_max: float = 3.0
    n_v: int = 40
    r_min: float = 3.0
    r_max: float = 7.5
    n_r_cells: int = 2001

    def v_grid(self):
        return linear_voltage_grid(self.v_min, self.v_max, self.n_v)

    def r_grid(self):
        return uniform_resistance_grid(self.r_min, self.r_max, self.n_r_cells)


@dataclass
class ChannelConfig:
    source: str = "synthetic"
    csv_path: str | None = None
    bandwidth: float | str = "auto"
    synthetic: dict = field(default_factory=dict)

    def params(self) -> SynthPcmParams:
        return SynthPcmParams.from_dict(self.synthetic)


@dataclass
class CapacityConfig:
    tol: float = 1e-6
    max_iter: int = 100_000
    support_epsilon: float = 1e-6


@dataclass
class LevelsConfig:
    reads: list = field(default_factory=lambda: [2, 4, 8, 16, 32])
    writes: list = field(default_factory=lambda: [2, 4, 8, 16])
    anneal: dict = field(default_factory=dict)
    eval_tol: float = 1e-4

    def schedule(self, seed) -> AnnealSchedule:
        known = {f.name for f in dataclasses.fields(AnnealSchedule)} - {"seed"}
        unknown = set(self.anneal) - known
        if unknown:
            raise ConfigError(f"unknown anneal key(s): {sorted(unknown)}")
        return AnnealSchedule(**self.anneal, seed=seed)


@dataclass
class EnergyConfig:
    model: str = "parametric"
    a: float | None = None
    b: float = 0.0
    c: float = 0.0
    table: list | None = None
    n_s: int = 60
    s_values: list | None = None
    tol: float = 1e-7


@dataclass
class JointConfig:
    mean: float = 0.0
    variance: float = 1.0
    n_points: int = 1000
    span: float = 4.0
    n_bins: int = 256
    max_rounds: int = 500
    tol: float = 1e-12
    n_random: int = 3
    power_weight: float = 0.0


@dataclass
class RdConfig:
    capacities: list | None = None
    rates: list = field(default_factory=lambda: [1.0])
    hybrid: str = "fixed_rate"
    quantizer_levels: list | None = None


_SECTIONS = {
    "grids": GridConfig,
    "channel": ChannelConfig,
    "capacity": CapacityConfig,
    "levels": LevelsConfig,
    "energy": EnergyConfig,
    "joint": JointConfig,
    "rd": RdConfig,
}


@dataclass
class RunConfig:
    seed: int = 0
    output_dir: str = "out"
    grids: GridConfig = field(default_factory=GridConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    capacity: CapacityConfig = field(default_factory=CapacityConfig)
    levels: LevelsConfig = field(default_factory=LevelsConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    joint: JointConfig = field(default_factory=JointConfig)
    rd: RdConfig = field(default_factory=RdConfig)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config document must be a JSON object")
        unknown = set(d) - set(_SECTIONS) - {"seed", "output_dir"}
        if unknown:
            raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
        kw = {}
        for name, typ in _SECTIONS.items():
            sec = d.get(name, {})
            if not isinstance(sec, dict):
                raise ConfigError(f"section {name!r} must be an object")
            try:
                kw[name] = typ(**sec)
            except TypeError as e:
                raise ConfigError(f"section {name!r}: {e}") from None
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        cfg = cls(seed=seed, output_dir=str(d.get("output_dir", "out")), **kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        return cls.from_dict(doc)

    def validate(self) -> None:
        ch = self.channel
        if ch.source not in ("synthetic", "csv"):
            raise ConfigError("channel.source must be 'synthetic' or 'csv'")
        if ch.source == "csv" and not ch.csv_path:
            raise ConfigError("channel.source 'csv' needs channel.csv_path")
        if ch.source == "synthetic" and ch.csv_path:
            raise ConfigError("give either a synthetic channel or a csv_path, not both")
        if self.energy.model not in ("parametric", "table"):
            raise ConfigError("energy.model must be 'parametric' or 'table'")
        if self.energy.model == "table" and not self.energy.table:
            raise ConfigError("energy.model 'table' needs energy.table")
        ch.params()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def channel_hash(self) -> str:
        """Digest of everything that determines channel.json."""
        ch = self.channel
        doc = {"grids": dataclasses.asdict(self.grids), "source": ch.source}
        if ch.source == "synthetic":
            # resolved parameters, so explicit defaults hash like omitted ones
            doc["synthetic"] = dataclasses.asdict(ch.params())
        else:
            doc["bandwidth"] = ch.bandwidth
        if ch.source == "csv" and Path(ch.csv_path).exists():
            doc["csv_sha256"] = hashlib.sha256(Path(ch.csv_path).read_bytes()).hexdigest()
        return _digest(doc)

    def config_hash(self) -> str:
        return _digest(self.to_dict())


def _digest(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def subseed(seed: int, name: str) -> int:
    """Per-module seed: first 64-bit word of ``SeedSequence([seed, crc32(name)])``.

    Lets one module be re-run alone with the same randomness it had inside a
    full pipeline run.
    """
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
