"""Direct (joint source-channel) storage of a scalar Gaussian source.

An encoder maps each source grid point to a write level; a decoder maps each
read cell to a reconstruction. Distortion is the exact MSE over the discrete
source grid and read cells. Optimal decoders are conditional means; optimal
encoders are found by enumerating every write level for every source point;
alternating the two gives the jointly optimized pair.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .channel import ConditionalChannel
from .errors import DimensionMismatch, InvalidParams

VARIANTS = ("naive", "decoder_only", "encoder_only", "joint")


@dataclass(frozen=True, eq=False)
class SourceModel:
    """Gaussian source discretized on ``n_points`` values spanning ``mean +- span * std``.

    Weights are the normal cell masses between grid midpoints. The grid is
    then shifted and scaled slightly so the discrete source has exactly the
    requested mean and variance (the tails beyond ``span`` are folded in).
    """

    mean: float = 0.0
    variance: float = 1.0
    n_points: int = 1000
    span: float = 4.0
    kind: str = "gaussian"
    grid: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind != "gaussian":
            raise InvalidParams(f"unsupported source kind {self.kind!r}")
        if not self.variance > 0 or self.n_points < 2 or not self.span > 0:
            raise InvalidParams("need variance > 0, n_points >= 2, span > 0")
        z = np.linspace(-self.span, self.span, int(self.n_points))
        mids = 0.5 * (z[1:] + z[:-1])
        cdf = np.concatenate(([0.0], ndtr(mids), [1.0]))
        w = np.diff(cdf)
        w /= w.sum()
        z = z - w @ z
        z /= np.sqrt(w @ z**2)
        grid = self.mean + np.sqrt(self.variance) * z
        grid.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "weights", w)

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))

    @property
    def lo(self) -> float:
        return self.mean - self.span * self.std

    @property
    def hi(self) -> float:
        return self.mean + self.span * self.std


@dataclass(frozen=True, eq=False)
class MappingTable:
    encoder: np.ndarray
    decoder: np.ndarray

    def __post_init__(self):
        enc = np.array(self.encoder, dtype=np.int64).ravel()
        dec = np.array(self.decoder, dtype=float).ravel()
        if not np.all(np.isfinite(dec)):
            raise InvalidParams("decoder values must be finite")
        enc.setflags(write=False)
        dec.setflags(write=False)
        object.__setattr__(self, "encoder", enc)
        object.__setattr__(self, "decoder", dec)

    def check(self, src: SourceModel, ch: ConditionalChannel) -> None:
        if self.encoder.size != src.grid.size:
            raise DimensionMismatch("encoder length differs from the source grid")
        if self.decoder.size != ch.n_reads:
            raise DimensionMismatch("decoder length differs from the number of read cells")
        if self.encoder.min() < 0 or self.encoder.max() >= ch.n_writes:
            raise DimensionMismatch("encoder refers to a write level outside the channel")

    def to_dict(self, src: SourceModel, ch: ConditionalChannel) -> dict:
        return {
            "source_grid": src.grid.tolist(),
            "encoder_levels": ch.v_grid[self.encoder].tolist(),
            "encoder_indices": self.encoder.tolist(),
            "read_cells": ch.cell_centers.tolist(),
            "decoder_values": self.decoder.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MappingTable":
        return cls(d["encoder_indices"], d["decoder_values"])


@dataclass(frozen=True, eq=False)
class CodingResult:
    mapping: MappingTable
    mse: float
    variance: float
    variant: str = "joint"
    converged: bool = True
    rounds: int = 0
    trace: tuple = ()
    power: float = 0.0

    @property
    def snr_db(self) -> float:
        return float(10.0 * np.log10(self.variance / self.mse))

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "mse": self.mse,
            "snr_db": self.snr_db,
            "converged": self.converged,
            "rounds": self.rounds,
            "mean_input_power": self.power,
        }


@dataclass(frozen=True, eq=False)
class EffectiveChannel:
    """P(S_hat | S): one row per source grid point, one column per reconstruction bin."""

    matrix: np.ndarray
    bin_edges: np.ndarray


def _level_stats(src, encoder, n_levels):
    """Per write level: source mass, first and second source moments of its preimage."""
    w, s = src.weights, src.grid
    mass = np.bincount(encoder, weights=w, minlength=n_levels)
    m1 = np.bincount(encoder, weights=w * s, minlength=n_levels)
    m2 = np.bincount(encoder, weights=w * s * s, minlength=n_levels)
    return mass, m1, m2


def naive_mapping(src: SourceModel, ch: ConditionalChannel) -> MappingTable:
    """Uncoded storage: affine source->voltage, affine read-cell->source maps.

    ``[mean - span*std, mean + span*std]`` is mapped onto the voltage range and
    snapped to the nearest level (ties to the lower one); read-cell centers are
    mapped affinely from the resistance range back onto the source range.
    """
    v = ch.v_grid
    if v.size == 1:
        enc = np.zeros(src.grid.size, dtype=int)
    else:
        target = v[0] + (src.grid - src.lo) / (src.hi - src.lo) * (v[-1] - v[0])
        enc = np.abs(target[:, None] - v[None, :]).argmin(axis=1)
    c = ch.cell_centers
    r_lo, r_hi = ch.r_grid[0], ch.r_grid[-1]
    dec = src.lo + (c - r_lo) / (r_hi - r_lo) * (src.hi - src.lo)
    return MappingTable(enc, dec)


def optimal_decoder(src: SourceModel, ch: ConditionalChannel, encoder) -> np.ndarray:
    """Conditional-mean decoder G(r) = E[S | R = r]; the source mean where P(r) = 0."""
    encoder = np.asarray(encoder, dtype=int)
    mass, m1, _ = _level_stats(src, encoder, ch.n_writes)
    num = m1 @ ch.matrix
    den = mass @ ch.matrix
    dec = np.full(ch.n_reads, src.mean)
    ok = den > 0
    dec[ok] = num[ok] / den[ok]
    return dec


def optimal_encoder(src: SourceModel, ch: ConditionalChannel, decoder, *, power_weight: float = 0.0) -> np.ndarray:
    """Per source point, the write level minimizing expected squared error.

    Enumerates every level: cost(s, v) = sum_r P(r|v) (G(r) - s)^2, plus
    ``power_weight * V_v^2`` when an average input power penalty is wanted.
    Ties go to the lower level.
    """
    g = np.asarray(decoder, dtype=float)
    W = ch.matrix
    a = W @ (g * g)
    b = W @ g
    s = src.grid
    cost = a[None, :] - 2.0 * s[:, None] * b[None, :]
    if power_weight:
        cost = cost + power_weight * ch.v_grid[None, :] ** 2
    return cost.argmin(axis=1)


def _mse(src, ch, encoder, decoder):
    mass, m1, m2 = _level_stats(src, encoder, ch.n_writes)
    W = ch.matrix
    g = np.asarray(decoder, dtype=float)
    val = mass @ (W @ (g * g)) - 2.0 * (m1 @ (W @ g)) + m2.sum()
    return max(float(val), 0.0)


def _power(src, ch, encoder):
    return float(src.weights @ ch.v_grid[encoder] ** 2)


def evaluate(src: SourceModel, ch: ConditionalChannel, mapping: MappingTable, variant: str = "joint") -> CodingResult:
    """Exact discrete MSE and SNR of a mapping."""
    mapping.check(src, ch)
    mse = _mse(src, ch, mapping.encoder, mapping.decoder)
    return CodingResult(mapping, mse, src.variance, variant, power=_power(src, ch, mapping.encoder))


def _alternate(src, ch, enc, dec, max_rounds, tol, encoder_first, power_weight):
    """Alternating minimization; returns (enc, dec, trace, rounds, converged).

    ``trace`` holds the objective (MSE + power penalty) at the start and after
    every half-step.
    """

    def objective(e, d):
        val = _mse(src, ch, e, d)
        return val + power_weight * _power(src, ch, e) if power_weight else val

    trace = [objective(enc, dec)]
    converged = False
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        start = trace[-1]
        for step in ("enc", "dec") if encoder_first else ("dec", "enc"):
            if step == "dec":
                dec = optimal_decoder(src, ch, enc)
            else:
                enc = optimal_encoder(src, ch, dec, power_weight=power_weight)
            trace.append(objective(enc, dec))
        if start - trace[-1] < tol:
            converged = True
            break
    return enc, dec, trace, rounds, converged


def solve_joint(
    src: SourceModel,
    ch: ConditionalChannel,
    init: MappingTable | None = None,
    max_rounds: int = 500,
    tol: float = 1e-12,
    *,
    n_random: int = 3,
    seed: int = 0,
    power_weight: float = 0.0,
) -> CodingResult:
    """Jointly optimized encoder/decoder by alternating minimization.

    With ``init`` a single decoder-first run starts from that mapping.
    Without it the best of several starts is returned: the naive mapping
    (once decoder-first, once encoder-first), the naive mapping with the
    voltage axis reversed, and ``n_random`` seeded random encoders.
    ``power_weight`` adds a Lagrangian penalty on the mean squared write
    voltage; the reported ``mse`` never includes it. ``converged`` is False
    if the best run hit ``max_rounds``.
    """
    if max_rounds < 1:
        raise InvalidParams("max_rounds must be >= 1")
    if init is not None:
        init.check(src, ch)
        starts = [(init.encoder, init.decoder, False)]
    else:
        naive = naive_mapping(src, ch)
        rev_enc = ch.n_writes - 1 - naive.encoder
        starts = [
            (naive.encoder, naive.decoder, False),
            (naive.encoder, naive.decoder, True),
            (rev_enc, optimal_decoder(src, ch, rev_enc), False),
        ]
        rng = np.random.default_rng(seed)
        for _ in range(n_random):
            enc = rng.integers(ch.n_writes, size=src.grid.size)
            starts.append((enc, optimal_decoder(src, ch, enc), False))
    best = None
    for enc, dec, enc_first in starts:
        enc, dec, trace, rounds, conv = _alternate(
            src, ch, np.asarray(enc), np.asarray(dec), max_rounds, tol, enc_first, power_weight
        )
        if best is None or trace[-1] < best[2][-1]:
            best = (enc, dec, trace, rounds, conv)
    enc, dec, trace, rounds, conv = best
    mapping = MappingTable(enc, dec)
    return CodingResult(
        mapping,
        _mse(src, ch, enc, dec),
        src.variance,
        "joint",
        conv,
        rounds,
        tuple(trace),
        _power(src, ch, enc),
    )


def coding_variants(src: SourceModel, ch: ConditionalChannel, *, seed: int = 0, **joint_kw) -> dict:
    """The four mappings compared in a rate-distortion plot.

    naive: naive encoder and decoder. decoder_only: naive encoder, optimal
    decoder. encoder_only: optimal encoder for the naive decoder. joint:
    ``solve_joint`` with its default multi-start.
    """
    naive = naive_mapping(src, ch)
    dec_only = MappingTable(naive.encoder, optimal_decoder(src, ch, naive.encoder))
    enc_only = MappingTable(optimal_encoder(src, ch, naive.decoder), naive.decoder)
    return {
        "naive": evaluate(src, ch, naive, "naive"),
        "decoder_only": evaluate(src, ch, dec_only, "decoder_only"),
        "encoder_only": evaluate(src, ch, enc_only, "encoder_only"),
        "joint": solve_joint(src, ch, seed=seed, **joint_kw),
    }


def effective_channel(src: SourceModel, ch: ConditionalChannel, mapping: MappingTable, n_bins: int = 256) -> EffectiveChannel:
    """P(S_hat | S) with reconstructions binned over the decoder's output range."""
    if n_bins < 2:
        raise InvalidParams("n_bins must be >= 2")
    mapping.check(src, ch)
    g = mapping.decoder
    lo, hi = float(g.min()), float(g.max())
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, n_bins + 1)
    bins = np.clip(np.searchsorted(edges, g, side="right") - 1, 0, n_bins - 1)
    per_level = np.zeros((ch.n_writes, n_bins))
    for v in np.unique(mapping.encoder):
        per_level[v] = np.bincount(bins, weights=ch.matrix[v], minlength=n_bins)
    return EffectiveChannel(per_level[mapping.encoder], edges)


def is_monotone(encoder) -> bool:
    d = np.diff(np.asarray(encoder))
    return bool(np.all(d >= 0) or np.all(d <= 0))


def write_mapping_json(result: CodingResult, src, ch, path) -> None:
    doc = result.to_dict()
    doc["mapping"] = result.mapping.to_dict(src, ch)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def write_effective_channel_csv(eff: EffectiveChannel, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        centers = 0.5 * (eff.bin_edges[1:] + eff.bin_edges[:-1])
        w.writerow(["source_index"] + [repr(c) for c in centers.tolist()])
        for i, row in enumerate(eff.matrix.tolist()):
            w.writerow([i] + [repr(x) for x in row])
