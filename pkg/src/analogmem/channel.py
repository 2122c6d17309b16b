"""Write->read conditional channels P(R|V) for analog memory cells.

Resistances are handled in log10(ohm) throughout. A channel's ``r_grid`` holds
the *edges* of its read cells, so a channel with ``k`` columns has ``k + 1``
grid points and column ``j`` is the probability that the read value falls in
``[r_grid[j], r_grid[j + 1])``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .errors import (
    CsvSchemaError,
    DataError,
    EmptyIndexSet,
    EmptyVoltageBin,
    IndexOutOfRange,
    InvalidGrid,
    InvalidParams,
    NonPositiveResistance,
    ThresholdOutOfRange,
    UnsortedThresholds,
)

ROW_SUM_TOL = 1e-9
CSV_HEADER = ("device_id", "v_wl_volts", "resistance_ohms")


def _as_readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def voltage_grid(levels) -> np.ndarray:
    """Validate write voltages: finite, strictly increasing, non-empty."""
    v = np.asarray(levels, dtype=float).ravel()
    if v.size < 1:
        raise InvalidGrid("voltage grid needs at least one level")
    if not np.all(np.isfinite(v)):
        raise InvalidGrid("voltage grid contains non-finite values")
    if np.any(np.diff(v) <= 0):
        raise InvalidGrid("voltage grid must be strictly increasing")
    return _as_readonly(v)


def resistance_grid(levels, rtol=1e-6) -> np.ndarray:
    """Validate a uniform log10-ohm cell-edge grid (>= 2 points)."""
    r = np.asarray(levels, dtype=float).ravel()
    if r.size < 2:
        raise InvalidGrid("resistance grid needs at least two points")
    if not np.all(np.isfinite(r)):
        raise InvalidGrid("resistance grid contains non-finite values")
    d = np.diff(r)
    if np.any(d <= 0):
        raise InvalidGrid("resistance grid must be strictly increasing")
    if not np.allclose(d, d[0], rtol=rtol, atol=0):
        raise InvalidGrid("resistance grid spacing must be uniform")
    return _as_readonly(r)


def linear_voltage_grid(v_min, v_max, n) -> np.ndarray:
    return voltage_grid(np.linspace(v_min, v_max, int(n)))


def uniform_resistance_grid(r_min, r_max, n_cells) -> np.ndarray:
    """Edges of ``n_cells`` equal-width read cells spanning [r_min, r_max]."""
    if int(n_cells) < 1:
        raise InvalidGrid("need at least one read cell")
    return resistance_grid(np.linspace(r_min, r_max, int(n_cells) + 1))


@dataclass(frozen=True, eq=False)
class ConditionalChannel:
    """Row-stochastic matrix P(R|V); one row per write level, one column per read cell."""

    v_grid: np.ndarray
    r_grid: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        v = voltage_grid(self.v_grid)
        r = np.asarray(self.r_grid, dtype=float).ravel()
        if r.size < 2 or np.any(np.diff(r) <= 0) or not np.all(np.isfinite(r)):
            raise InvalidGrid("r_grid must be finite, strictly increasing, length >= 2")
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape != (v.size, r.size - 1):
            raise InvalidGrid(
                f"matrix shape {m.shape} does not match grids ({v.size}, {r.size - 1})"
            )
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise InvalidGrid("channel entries must be finite and non-negative")
        bad = np.abs(m.sum(axis=1) - 1.0) > ROW_SUM_TOL
        if np.any(bad):
            raise InvalidGrid(f"rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        object.__setattr__(self, "v_grid", v)
        object.__setattr__(self, "r_grid", _as_readonly(r))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, matrix, v_grid=None, r_grid=None):
        """Wrap a bare stochastic matrix, using index grids where none are given."""
        m = np.asarray(matrix, dtype=float)
        if v_grid is None:
            v_grid = np.arange(m.shape[0], dtype=float)
        if r_grid is None:
            r_grid = np.arange(m.shape[1] + 1, dtype=float)
        return cls(v_grid, r_grid, m)

    @property
    def n_writes(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_reads(self) -> int:
        return self.matrix.shape[1]

    @property
    def cell_centers(self) -> np.ndarray:
        return 0.5 * (self.r_grid[1:] + self.r_grid[:-1])

    def to_dict(self) -> dict:
        return {
            "v_grid": self.v_grid.tolist(),
            "r_grid": self.r_grid.tolist(),
            "matrix": self.matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionalChannel":
        try:
            return cls(d["v_grid"], d["r_grid"], d["matrix"])
        except KeyError as e:
            raise DataError(f"channel document is missing {e.args[0]!r}") from None

    def save(self, path, **extra) -> None:
        doc = self.to_dict()
        doc.update(extra)
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def load(cls, path) -> "ConditionalChannel":
        path = Path(path)
        if not path.exists():
            raise DataError(f"channel file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: not valid JSON ({e})") from None
        return cls.from_dict(doc)


def _normalize_rows(mass, what="row"):
    tot = mass.sum(axis=1, keepdims=True)
    if np.any(tot <= 0):
        raise DataError(f"a {what} has no probability mass inside the read grid")
    return mass / tot


def gaussian_channel(v_grid, r_grid, means, stds) -> ConditionalChannel:
    """Rows are Gaussians (per-row mean/std) integrated over each read cell and renormalized."""
    means = np.broadcast_to(np.asarray(means, dtype=float), (len(v_grid),))
    stds = np.broadcast_to(np.asarray(stds, dtype=float), (len(v_grid),))
    if np.any(stds <= 0):
        raise InvalidParams("standard deviations must be positive")
    edges = np.asarray(r_grid, dtype=float)
    cdf = ndtr((edges[None, :] - means[:, None]) / stds[:, None])
    return ConditionalChannel(v_grid, edges, _normalize_rows(np.diff(cdf, axis=1)))


# --------------------------------------------------------------------------
# measurements


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    device_id: np.ndarray
    v_wl: np.ndarray
    resistance: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.device_id, dtype=np.int64).ravel()
        v = np.asarray(self.v_wl, dtype=float).ravel()
        r = np.asarray(self.resistance, dtype=float).ravel()
        if not (d.size == v.size == r.size):
            raise DataError("measurement columns have different lengths")
        if not np.all(np.isfinite(v)) or not np.all(np.isfinite(r)):
            raise DataError("measurements contain non-finite values")
        if np.any(r <= 0):
            raise NonPositiveResistance(
                f"{int(np.sum(r <= 0))} record(s) with resistance <= 0"
            )
        object.__setattr__(self, "device_id", _as_readonly(d, np.int64))
        object.__setattr__(self, "v_wl", _as_readonly(v))
        object.__setattr__(self, "resistance", _as_readonly(r))

    def __len__(self):
        return self.v_wl.size

    @property
    def log_resistance(self) -> np.ndarray:
        return np.log10(self.resistance)


def read_measurements_csv(path) -> MeasurementSet:
    """Parse ``device_id,v_wl_volts,resistance_ohms`` records (header required)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"measurement file not found: {path}")
    ids, vs, rs = [], [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvSchemaError("empty file", line=1) from None
        if tuple(header) != CSV_HEADER:
            bad = [h for h in header if h not in CSV_HEADER]
            missing = [h for h in CSV_HEADER if h not in header]
            raise CsvSchemaError(
                f"bad header {header}: unexpected column(s) {bad}, missing {missing}; "
                f"expected {','.join(CSV_HEADER)}",
                line=1,
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise CsvSchemaError(f"expected 3 fields, got {len(row)}", line=lineno)
            try:
                ids.append(int(row[0]))
                vs.append(float(row[1]))
                rs.append(float(row[2]))
            except ValueError as e:
                raise CsvSchemaError(str(e), line=lineno) from None
            if rs[-1] <= 0:
                raise NonPositiveResistance(f"line {lineno}: resistance {rs[-1]} <= 0")
    return MeasurementSet(ids, vs, rs)


def write_measurements_csv(meas: MeasurementSet, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for d, v, r in zip(meas.device_id.tolist(), meas.v_wl.tolist(), meas.resistance.tolist()):
            w.writerow((d, repr(v), repr(r)))


def silverman_bandwidth(x) -> float:
    """Silverman's rule of thumb, 0.9 * min(std, IQR/1.349) * n^(-1/5).

    Returns 0.0 for a sample with no spread; callers decide the fallback.
    """
    x = np.asarray(x, dtype=float)
    std = x.std(ddof=1) if x.size > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    iqr = (q75 - q25) / 1.349
    spread = min(std, iqr) if iqr > 0 else std
    return 0.9 * spread * x.size ** -0.2


def _kde_cell_mass(x, edges, h, chunk=2048):
    acc = np.zeros(edges.size)
    for i in range(0, x.size, chunk):
        xs = x[i : i + chunk]
        acc += ndtr((edges[None, :] - xs[:, None]) / h).sum(axis=0)
    return np.diff(acc) / x.size


def assign_to_levels(v_wl, v_grid) -> np.ndarray:
    """Index of the nearest grid level for every voltage (ties go to the lower level)."""
    v_grid = np.asarray(v_grid, dtype=float)
    if v_grid.size == 1:
        return np.zeros(len(v_wl), dtype=int)
    mids = 0.5 * (v_grid[1:] + v_grid[:-1])
    return np.searchsorted(mids, np.asarray(v_wl, dtype=float), side="left")


def estimate_kde(meas: MeasurementSet, v_grid, r_grid, bandwidth="auto") -> ConditionalChannel:
    """Gaussian-KDE estimate of P(R|V) from measurements.

    Records are snapped to the nearest ``v_grid`` level. For each level the
    KDE over log10(resistance) is integrated over every read cell and the row
    renormalized. ``bandwidth="auto"`` applies Silverman's rule per row; a row
    with zero spread falls back to half a read-cell width.
    """
    v_grid = voltage_grid(v_grid)
    r_grid = resistance_grid(r_grid)
    if isinstance(bandwidth, str):
        if bandwidth != "auto":
            raise InvalidParams(f"bandwidth must be positive or 'auto', got {bandwidth!r}")
    elif not (np.isfinite(bandwidth) and bandwidth > 0):
        raise InvalidParams(f"bandwidth must be positive, got {bandwidth!r}")

    logr = meas.log_resistance
    idx = assign_to_levels(meas.v_wl, v_grid)
    counts = np.bincount(idx, minlength=v_grid.size)
    short = np.flatnonzero(counts < 2)
    if short.size:
        raise EmptyVoltageBin(
            f"voltage level(s) {v_grid[short].tolist()} have fewer than 2 records"
        )
    cell = r_grid[1] - r_grid[0]
    rows = np.empty((v_grid.size, r_grid.size - 1))
    for i in range(v_grid.size):
        x = logr[idx == i]
        h = silverman_bandwidth(x) if bandwidth == "auto" else float(bandwidth)
        if h <= 0:
            h = 0.5 * cell
        rows[i] = _kde_cell_mass(x, r_grid, h)
    return ConditionalChannel(v_grid, r_grid, _normalize_rows(rows, "KDE row"))


# --------------------------------------------------------------------------
# synthetic PCM surrogate


@dataclass(frozen=True)
class SynthPcmParams:
    """Parameters of the synthetic PCM write->read surrogate (log10 ohms, volts).

    Mean read value::

        mu(v) = r_set + (r_max - r_set) * [w * sig(slope1 * (v - v_onset))
                                           + (1 - w) * sig(slope2 * (v - v_melt))]
                - dip_depth * exp(-0.5 * ((v - v_dip) / dip_width)**2)

    with ``w = plateau_weight``, ``sig`` the logistic function and
    ``v_dip = v_melt - dip_offset``. Std dev of the read value is
    ``noise_floor + noise_slope * max(0, v - v_onset)``.

    The defaults give a ~2.5-decade window with a metastable plateau between
    the two rises and a shallow dip just before the melt rise. They are
    illustrative only, not fitted to any device.
    """

    r_set: float = 3.8
    r_max: float = 6.4
    v_onset: float = 1.2
    v_melt: float = 2.4
    slope1: float = 9.0
    slope2: float = 7.0
    plateau_weight: float = 0.5
    noise_floor: float = 0.07
    noise_slope: float = 0.12
    dip_depth: float = 0.15
    dip_width: float = 0.15
    dip_offset: float = 0.35

    def __post_init__(self):
        vals = [getattr(self, f.name) for f in fields(self)]
        if not all(np.isfinite(vals)):
            raise InvalidParams("synthetic PCM parameters must be finite")
        if not self.r_set < self.r_max:
            raise InvalidParams("r_set must be below r_max")
        if not self.v_onset < self.v_melt:
            raise InvalidParams("v_onset must be below v_melt")
        if self.noise_floor <= 0 or self.noise_slope < 0:
            raise InvalidParams("noise_floor must be > 0 and noise_slope >= 0")
        if self.slope1 <= 0 or self.slope2 <= 0:
            raise InvalidParams("sigmoid slopes must be positive")
        if not 0 <= self.plateau_weight <= 1:
            raise InvalidParams("plateau_weight must lie in [0, 1]")
        if self.dip_depth < 0 or self.dip_width <= 0:
            raise InvalidParams("dip_depth must be >= 0 and dip_width > 0")

    @classmethod
    def from_dict(cls, d: dict | None) -> "SynthPcmParams":
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParams(f"unknown synthetic parameter(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def mean(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        s1 = 1.0 / (1.0 + np.exp(-self.slope1 * (v - self.v_onset)))
        s2 = 1.0 / (1.0 + np.exp(-self.slope2 * (v - self.v_melt)))
        w = self.plateau_weight
        rise = self.r_set + (self.r_max - self.r_set) * (w * s1 + (1 - w) * s2)
        v_dip = self.v_melt - self.dip_offset
        return rise - self.dip_depth * np.exp(-0.5 * ((v - v_dip) / self.dip_width) ** 2)

    def std(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.noise_floor + self.noise_slope * np.maximum(0.0, v - self.v_onset)

    def sample(self, v, rng) -> np.ndarray:
        """Draw log10 read values for write voltages ``v``."""
        v = np.asarray(v, dtype=float)
        return rng.normal(self.mean(v), self.std(v))


def synth_pcm_channel(params: SynthPcmParams, v_grid, r_grid) -> ConditionalChannel:
    v_grid = voltage_grid(v_grid)
    r_grid = resistance_grid(r_grid)
    return gaussian_channel(v_grid, r_grid, params.mean(v_grid), params.std(v_grid))


def sample_measurements(params: SynthPcmParams, v_levels, n_trials, rng, n_devices=100):
    """Synthetic replay data: ``n_trials`` reads per voltage, round-robin over devices."""
    v_levels = voltage_grid(v_levels)
    v = np.repeat(v_levels, int(n_trials))
    dev = np.tile(np.arange(int(n_trials)) % int(n_devices), v_levels.size)
    return MeasurementSet(dev, v, 10.0 ** params.sample(v, rng))


# --------------------------------------------------------------------------
# transforms


def threshold_edges(ch: ConditionalChannel, thresholds) -> np.ndarray:
    """Snap log10-ohm thresholds to interior grid-point indices."""
    t = np.asarray(thresholds, dtype=float).ravel()
    if t.size and np.any(np.diff(t) <= 0):
        raise UnsortedThresholds("thresholds must be strictly increasing")
    r = ch.r_grid
    if t.size and (t[0] <= r[0] or t[-1] >= r[-1]):
        raise ThresholdOutOfRange(
            f"thresholds must lie strictly inside ({r[0]}, {r[-1]})"
        )
    idx = np.abs(r[None, :] - t[:, None]).argmin(axis=1)
    if np.any(np.diff(idx) <= 0) or (idx.size and (idx[0] == 0 or idx[-1] == r.size - 1)):
        raise UnsortedThresholds("thresholds collapse onto the same read-grid point")
    return idx


def merge_columns(cum, edge_idx) -> np.ndarray:
    """Super-cell masses from a row-wise cumulative table (leading zero column)."""
    bounds = np.concatenate(([0], np.asarray(edge_idx, dtype=int), [cum.shape[1] - 1]))
    return np.diff(cum[:, bounds], axis=1)


def cumulative_columns(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    return np.concatenate([np.zeros((m.shape[0], 1)), np.cumsum(m, axis=1)], axis=1)


def discretize_reads(ch: ConditionalChannel, thresholds) -> ConditionalChannel:
    """Merge read cells into the k+1 super-cells induced by k thresholds.

    Thresholds are snapped to the nearest read-grid point; cell masses are
    never split.
    """
    idx = threshold_edges(ch, thresholds)
    m = merge_columns(cumulative_columns(ch.matrix), idx)
    m = m / m.sum(axis=1, keepdims=True)
    bounds = np.concatenate(([0], idx, [ch.r_grid.size - 1]))
    return ConditionalChannel(ch.v_grid, ch.r_grid[bounds], m)


def restrict_writes(ch: ConditionalChannel, indices) -> ConditionalChannel:
    idx = np.asarray(list(indices), dtype=int).ravel()
    if idx.size == 0:
        raise EmptyIndexSet("need at least one write level")
    if np.any(idx < 0) or np.any(idx >= ch.n_writes):
        raise IndexOutOfRange(f"write indices must lie in [0, {ch.n_writes})")
    if np.unique(idx).size != idx.size:
        raise IndexOutOfRange("write indices must be distinct")
    idx = np.sort(idx)
    return ConditionalChannel(ch.v_grid[idx], ch.r_grid, ch.matrix[idx])
