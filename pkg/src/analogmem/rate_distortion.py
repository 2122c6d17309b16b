"""Separate-coding baselines for a Gaussian source under MSE."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, NegativeRate
from .joint import CodingResult, SourceModel

REPORT_CSV_HEADER = ("label", "rate_devices_per_symbol", "mse", "snr_db")
SNR_DB_PER_BIT = 20.0 * math.log10(2.0)


def snr_db(variance, mse) -> float:
    return float(10.0 * np.log10(variance / mse))


@dataclass(frozen=True)
class RDPoint:
    label: str
    rate_devices_per_symbol: float
    mse: float
    snr_db: float

    @classmethod
    def from_mse(cls, label, rate, mse, variance) -> "RDPoint":
        return cls(label, float(rate), float(mse), snr_db(variance, mse))


def gaussian_rd_bound(variance: float, rate_bits: float, devices_per_symbol: float | None = None, label: str | None = None) -> RDPoint:
    """Shannon distortion-rate point D = variance * 2^(-2R) for a Gaussian source.

    ``rate_bits`` is bits per source symbol. The point's rate field is
    ``devices_per_symbol`` when given, else ``rate_bits`` itself.
    """
    if rate_bits < 0:
        raise NegativeRate(f"rate must be >= 0, got {rate_bits}")
    if variance <= 0:
        raise InvalidParams("variance must be positive")
    mse = variance * 2.0 ** (-2.0 * rate_bits)
    rate = rate_bits if devices_per_symbol is None else devices_per_symbol
    return RDPoint(label or f"R(D) {rate_bits:g} bits", float(rate), float(mse), SNR_DB_PER_BIT * rate_bits)


def separate_bound_curve(capacity_bits_per_device: float, rates_devices_per_symbol, variance: float) -> list[RDPoint]:
    """Optimal separate coding: ``m`` devices per symbol carry ``m * C`` bits."""
    c = float(capacity_bits_per_device)
    if not c > 0:
        raise InvalidParams("capacity must be positive")
    label = f"separate C={c:.4g}"
    return [gaussian_rd_bound(variance, m * c, m, label) for m in rates_devices_per_symbol]


@dataclass(frozen=True, eq=False)
class Quantizer:
    levels: np.ndarray
    boundaries: np.ndarray
    distortion: float
    converged: bool = True
    iterations: int = 0

    @property
    def n_levels(self) -> int:
        return self.levels.size


def _assign(grid, boundaries):
    # a grid point on a boundary belongs to the lower cell
    return np.searchsorted(boundaries, grid, side="left")


def quantizer_mse(src: SourceModel, levels, boundaries) -> float:
    idx = _assign(src.grid, boundaries)
    return float(src.weights @ (src.grid - np.asarray(levels)[idx]) ** 2)


def lloyd_max(src: SourceModel, n_levels: int, tol: float = 1e-10, max_iter: int = 10_000) -> Quantizer:
    """Lloyd iteration on the discrete source grid.

    Starts from the centroids of equal-probability cells and alternates
    midpoint boundaries with weighted centroids until no level moves by
    more than ``tol``. A cell that empties keeps its previous level.
    """
    n_levels = int(n_levels)
    if n_levels < 1:
        raise InvalidParams("n_levels must be >= 1")
    s, w = src.grid, src.weights
    # mid-cell CDF keeps the initial split symmetric for a symmetric source
    cdf = np.cumsum(w) - 0.5 * w
    idx = np.minimum((cdf * n_levels).astype(int), n_levels - 1)
    mass = np.bincount(idx, weights=w, minlength=n_levels)
    levels = np.bincount(idx, weights=w * s, minlength=n_levels) / np.where(mass > 0, mass, 1)
    levels = np.where(mass > 0, levels, np.interp(np.arange(n_levels), [0, n_levels - 1], [s[0], s[-1]]))
    levels = np.sort(levels)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        bounds = 0.5 * (levels[1:] + levels[:-1])
        idx = _assign(s, bounds)
        mass = np.bincount(idx, weights=w, minlength=n_levels)
        cent = np.bincount(idx, weights=w * s, minlength=n_levels)
        new = np.where(mass > 0, cent / np.where(mass > 0, mass, 1), levels)
        move = np.abs(new - levels).max()
        levels = new
        if move < tol:
            converged = True
            break
    bounds = 0.5 * (levels[1:] + levels[:-1])
    return Quantizer(levels, bounds, quantizer_mse(src, levels, bounds), converged, it)


def _index_entropy(src, step):
    idx = np.floor((src.grid - src.mean) / step + 0.5).astype(int)
    _, inv = np.unique(idx, return_inverse=True)
    p = np.bincount(inv, weights=src.weights)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()), inv


def entropy_coded_quantizer_mse(src: SourceModel, rate_bits: float, iters: int = 200) -> float:
    """MSE of a uniform mid-tread quantizer whose index entropy is ``rate_bits``.

    Reconstruction at cell centroids; the step is found by bisection.
    """
    if rate_bits <= 0:
        return float(src.weights @ (src.grid - src.mean) ** 2)
    lo, hi = 1e-6 * src.std, 20.0 * src.std
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        h, _ = _index_entropy(src, mid)
        if h > rate_bits:
            lo = mid
        else:
            hi = mid
    _, inv = _index_entropy(src, hi)
    mass = np.bincount(inv, weights=src.weights)
    cent = np.bincount(inv, weights=src.weights * src.grid) / mass
    return float(src.weights @ (src.grid - cent[inv]) ** 2)


def comparison_report(
    joint_results,
    capacities,
    quantizer_levels=None,
    *,
    src: SourceModel | None = None,
    rates=(1.0,),
    hybrid: str = "fixed_rate",
) -> list[RDPoint]:
    """Labeled rate-distortion table for one storage setup.

    Joint results are block-length-1 mappings at 1 device/symbol. For every
    capacity ``C`` and rate ``m`` it adds the separate-coding bound and the
    hybrid point "capacity-achieving channel code + scalar quantizer": with
    ``hybrid="fixed_rate"`` a Lloyd-Max quantizer with ``floor(2^(m C))``
    levels (or the matching entry of ``quantizer_levels``); with
    ``hybrid="entropy_coded"`` a uniform quantizer with index entropy ``m C``.
    """
    src = src or SourceModel()
    capacities = list(capacities)
    if quantizer_levels is not None and len(quantizer_levels) != len(capacities):
        raise InvalidParams("quantizer_levels must pair one-to-one with capacities")
    if hybrid not in ("fixed_rate", "entropy_coded"):
        raise InvalidParams(f"unknown hybrid mode {hybrid!r}")
    out = []
    for res in joint_results:
        out.append(RDPoint.from_mse(f"joint {res.variant} block=1", 1.0, res.mse, src.variance))
    for i, c in enumerate(capacities):
        for m in rates:
            out.extend(separate_bound_curve(c, [m], src.variance))
            if hybrid == "fixed_rate":
                n = int(quantizer_levels[i]) if quantizer_levels is not None else int(math.floor(2.0 ** (m * c)))
                mse = lloyd_max(src, max(n, 1)).distortion
                label = f"scalar-quantized C={c:.4g} levels={max(n, 1)}"
            else:
                mse = entropy_coded_quantizer_mse(src, m * c)
                label = f"scalar-quantized C={c:.4g} entropy-coded"
            out.append(RDPoint.from_mse(label, m, mse, src.variance))
    return out


def write_report_csv(points, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_CSV_HEADER)
        for p in points:
            w.writerow((p.label, repr(p.rate_devices_per_symbol), repr(p.mse), repr(p.snr_db)))
