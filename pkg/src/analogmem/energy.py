"""Capacity-vs-energy frontier and minimum energy per bit."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .capacity import DEFAULT_MAX_ITER, blahut_arimoto_constrained
from .channel import ConditionalChannel
from .errors import AllZeroCapacity, DimensionMismatch, InvalidParams

FRONTIER_CSV_HEADER = ("lagrange_s", "capacity_bits", "avg_energy_nj", "energy_per_bit_nj")
SWEEP_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class EnergyModel:
    """Energy per write pulse (nJ) for every write level."""

    per_level_nj: np.ndarray
    source: str = "table"
    coefficients: tuple | None = None

    def __post_init__(self):
        e = np.array(self.per_level_nj, dtype=float).ravel()
        if e.size == 0 or not np.all(np.isfinite(e)) or np.any(e <= 0):
            raise InvalidParams("pulse energies must be finite and > 0")
        if self.source not in ("table", "parametric"):
            raise InvalidParams(f"unknown energy model source {self.source!r}")
        e.setflags(write=False)
        object.__setattr__(self, "per_level_nj", e)

    @classmethod
    def table(cls, values) -> "EnergyModel":
        return cls(values, "table")

    @classmethod
    def parametric(cls, v_grid, a=None, b=0.0, c=0.0) -> "EnergyModel":
        """e(v) = a v^2 + b v + c.

        The default ``a`` puts e(3 V) at 1 nJ. That scale is a placeholder,
        not a measured value.
        """
        if a is None:
            a = 1.0 / 9.0
        v = np.asarray(v_grid, dtype=float)
        return cls(a * v**2 + b * v + c, "parametric", (float(a), float(b), float(c)))

    def check(self, ch: ConditionalChannel) -> np.ndarray:
        if self.per_level_nj.size != ch.n_writes:
            raise DimensionMismatch(
                f"energy model has {self.per_level_nj.size} levels, channel has {ch.n_writes}"
            )
        return self.per_level_nj


@dataclass(frozen=True, eq=False)
class EfficiencyPoint:
    lagrange_s: float
    capacity_bits: float
    avg_energy_nj: float
    input_probs: np.ndarray

    @property
    def energy_per_bit_nj(self) -> float:
        return self.avg_energy_nj / self.capacity_bits if self.capacity_bits > 0 else np.inf

    def mean_voltage(self, ch: ConditionalChannel) -> float:
        return float(self.input_probs @ ch.v_grid)


def _solve(ch, cost, s, tol, max_iter):
    res, avg = blahut_arimoto_constrained(ch, cost, s, tol, max_iter)
    return EfficiencyPoint(float(s), res.capacity_bits, avg, res.input_probs)


def default_s_values(ch: ConditionalChannel, em: EnergyModel, n: int = 60, *, tol=1e-6, span=1e-4):
    """``0`` followed by ``n - 1`` log-spaced multipliers up to ``s_max``.

    ``s_max`` is the first power of two at which the optimal mean energy
    comes within 1% of the cheapest level; the log grid spans ``span * s_max``
    to ``s_max``.
    """
    cost = em.check(ch)
    floor = cost.min()
    s = 1.0 / floor
    for _ in range(200):
        _, avg = blahut_arimoto_constrained(ch, cost, s, tol)
        if avg <= 1.01 * floor:
            break
        s *= 2.0
    return np.concatenate(([0.0], np.geomspace(span * s, s, n - 1)))


def energy_sweep(
    ch: ConditionalChannel,
    em: EnergyModel,
    s_values=None,
    *,
    tol: float = SWEEP_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> list[EfficiencyPoint]:
    """One independent cost-constrained capacity solve per multiplier."""
    cost = em.check(ch)
    if s_values is None:
        s_values = default_s_values(ch, em)
    s_values = np.asarray(s_values, dtype=float)
    if s_values.size == 0 or s_values[0] != 0 or np.any(np.diff(s_values) <= 0):
        raise InvalidParams("s_values must start at 0 and increase strictly")
    return [_solve(ch, cost, s, tol, max_iter) for s in s_values]


def min_energy_per_bit(points) -> tuple[EfficiencyPoint, float]:
    """Most efficient point and its saving ``1 - epb_min / epb(s=0)``.

    The reference is the point with the smallest ``s`` (normally ``s = 0``).
    """
    points = list(points)
    if not points:
        raise InvalidParams("no efficiency points given")
    if all(p.capacity_bits <= 0 for p in points):
        raise AllZeroCapacity("every point has zero capacity")
    best = min(points, key=lambda p: p.energy_per_bit_nj)
    ref = min(points, key=lambda p: p.lagrange_s)
    saving = 1.0 - best.energy_per_bit_nj / ref.energy_per_bit_nj if np.isfinite(ref.energy_per_bit_nj) else 1.0
    return best, float(saving)


def write_frontier(points, csv_path, json_path=None) -> None:
    """Frontier CSV plus an optional JSON sidecar with the input distributions."""
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRONTIER_CSV_HEADER)
        for p in points:
            w.writerow((repr(p.lagrange_s), repr(p.capacity_bits), repr(p.avg_energy_nj), repr(p.energy_per_bit_nj)))
    if json_path is not None:
        doc = [{"lagrange_s": p.lagrange_s, "input_probs": p.input_probs.tolist()} for p in points]
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
