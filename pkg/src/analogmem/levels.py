"""Discrete read-threshold / write-subset design by simulated annealing.

A design picks ``n_writes`` rows of an analog channel and ``n_reads - 1``
read thresholds; its score is the capacity of the induced discrete channel.
Thresholds always sit on read-grid points, so a design is fully described
by (write indices, edge indices) and cell masses are never split.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .capacity import CapacityResult, blahut_arimoto
from .channel import ConditionalChannel, cumulative_columns, discretize_reads, merge_columns, restrict_writes
from .errors import InvalidCounts, InvalidParams, SearchSpaceTooLarge

EVAL_TOL = 1e-4
FINAL_TOL = 1e-6
MAX_SEARCH_SPACE = 10**7
SURFACE_CSV_HEADER = ("n_writes", "n_reads", "capacity_bits", "thresholds_json", "write_indices_json")


@dataclass(frozen=True)
class AnnealSchedule:
    initial_temp: float = 0.1
    cooling_rate: float = 0.95
    steps_per_temp: int = 200
    min_temp: float = 1e-4
    proposal_sigma: float = 0.1
    seed: int = 0
    swap_prob: float = 0.2

    def __post_init__(self):
        if not self.initial_temp > self.min_temp > 0:
            raise InvalidParams("need initial_temp > min_temp > 0")
        if not 0 < self.cooling_rate < 1:
            raise InvalidParams("cooling_rate must lie in (0, 1)")
        if self.steps_per_temp < 1:
            raise InvalidParams("steps_per_temp must be >= 1")
        if self.proposal_sigma <= 0:
            raise InvalidParams("proposal_sigma must be positive")
        if not 0 <= self.swap_prob <= 1:
            raise InvalidParams("swap_prob must lie in [0, 1]")

    @property
    def n_temps(self) -> int:
        return max(1, math.ceil(math.log(self.min_temp / self.initial_temp) / math.log(self.cooling_rate)))

    def with_seed(self, seed) -> "AnnealSchedule":
        return AnnealSchedule(
            self.initial_temp, self.cooling_rate, self.steps_per_temp,
            self.min_temp, self.proposal_sigma, seed, self.swap_prob,
        )


@dataclass(frozen=True, eq=False)
class LevelDesign:
    write_indices: tuple
    edge_indices: tuple
    read_thresholds: np.ndarray
    capacity_bits: float
    input_probs: np.ndarray | None = None
    trace: np.ndarray | None = None

    @property
    def n_writes(self) -> int:
        return len(self.write_indices)

    @property
    def n_reads(self) -> int:
        return len(self.edge_indices) + 1

    def channel(self, ch: ConditionalChannel) -> ConditionalChannel:
        """The discrete channel this design induces on ``ch``."""
        return discretize_reads(restrict_writes(ch, self.write_indices), self.read_thresholds)

    def to_dict(self) -> dict:
        return {
            "n_writes": self.n_writes,
            "n_reads": self.n_reads,
            "capacity_bits": self.capacity_bits,
            "read_thresholds": self.read_thresholds.tolist(),
            "write_indices": list(self.write_indices),
        }


class _Objective:
    """Cached capacity of (write subset, edge set) designs on one channel."""

    def __init__(self, ch: ConditionalChannel, tol: float):
        self.ch = ch
        self.cum = cumulative_columns(ch.matrix)
        self.tol = tol
        self.cache = {}
        self.evaluations = 0

    def matrix(self, writes, edges):
        m = merge_columns(self.cum[list(writes)], edges)
        return m / m.sum(axis=1, keepdims=True)

    def __call__(self, writes, edges, tol=None, warm=None):
        """Capacity of a design; ``warm=(writes, probs)`` seeds the solver."""
        key = (writes, edges)
        if tol is None and key in self.cache:
            return self.cache[key][0]
        self.evaluations += 1
        p0 = None
        if warm is not None:
            prev = dict(zip(warm[0], warm[1]))
            fill = 1.0 / len(writes)
            p0 = np.array([prev.get(w, fill) for w in writes])
            # keep every row reachable; multiplicative updates cannot revive zeros
            p0 = 0.9 * p0 / p0.sum() + 0.1 * fill
        res = blahut_arimoto(self.matrix(writes, edges), tol=tol or self.tol, p0=p0)
        if tol is None:
            self.cache[key] = (res.capacity_bits, res.input_probs)
            return res.capacity_bits
        return res

    def probs(self, writes, edges):
        return self.cache[(writes, edges)][1]

    def design(self, writes, edges, trace=None) -> LevelDesign:
        res = self(writes, edges, tol=FINAL_TOL)
        return LevelDesign(
            tuple(int(w) for w in writes),
            tuple(int(e) for e in edges),
            self.ch.r_grid[list(edges)].copy(),
            res.capacity_bits,
            res.input_probs,
            trace,
        )


def _check_counts(ch, n_reads, n_writes):
    if n_reads < 2:
        raise InvalidCounts("n_reads must be >= 2")
    if not 1 <= n_writes <= ch.n_writes:
        raise InvalidCounts(f"n_writes must lie in [1, {ch.n_writes}]")
    if n_reads > ch.n_reads:
        raise InvalidCounts(f"n_reads={n_reads} exceeds the {ch.n_reads} read cells")


def _initial_writes(n_writes, analog: CapacityResult):
    """Spread the pick over the analog optimum's support, topping up by probability."""
    support = analog.support
    if n_writes <= support.size:
        pick = support[np.round(np.linspace(0, support.size - 1, n_writes)).astype(int)]
        if np.unique(pick).size == n_writes:
            return tuple(sorted(int(i) for i in pick))
    order = np.argsort(-analog.input_probs, kind="stable")
    return tuple(sorted(int(i) for i in order[:n_writes]))


def _initial_edges(cum_rows, n_reads):
    """Quantiles of the output distribution under a uniform input, made distinct."""
    n_cells = cum_rows.shape[1] - 1
    q_cum = cum_rows.mean(axis=0)
    targets = np.arange(1, n_reads) / n_reads
    idx = np.clip(np.searchsorted(q_cum, targets), 1, n_cells - 1)
    return _make_distinct(idx, n_cells)


def _make_distinct(idx, n_cells):
    idx = np.sort(np.asarray(idx, dtype=int))
    k = idx.size
    for i in range(k):
        idx[i] = max(idx[i], (idx[i - 1] + 1) if i else 1)
    for i in range(k - 1, -1, -1):
        idx[i] = min(idx[i], (idx[i + 1] - 1) if i < k - 1 else n_cells - 1)
    return tuple(int(i) for i in idx)


def refine_edges(ch: ConditionalChannel, writes, edges, n_reads) -> tuple:
    """Add thresholds to ``edges`` until there are ``n_reads - 1``.

    Each new threshold splits the super-cell carrying the most output mass
    (uniform input on ``writes``) at its median. Refinement never lowers
    capacity, so this is used to warm-start larger designs from smaller ones.
    """
    cum = cumulative_columns(ch.matrix)[list(writes)].mean(axis=0)
    edges = sorted(edges)
    n_cells = ch.n_reads
    while len(edges) < n_reads - 1:
        bounds = [0] + edges + [n_cells]
        best = None
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi - lo < 2:
                continue
            mass = cum[hi] - cum[lo]
            if best is None or mass > best[0]:
                best = (mass, lo, hi)
        if best is None:
            raise InvalidCounts("no read cell left to split")
        _, lo, hi = best
        mid = int(np.searchsorted(cum, 0.5 * (cum[lo] + cum[hi])))
        edges.append(min(max(mid, lo + 1), hi - 1))
        edges.sort()
    return tuple(edges)


def optimize_read_levels(
    ch: ConditionalChannel,
    n_reads: int,
    n_writes: int,
    sched: AnnealSchedule = AnnealSchedule(),
    *,
    init: tuple | None = None,
    analog: CapacityResult | None = None,
    eval_tol: float = EVAL_TOL,
) -> LevelDesign:
    """Simulated annealing over (read thresholds, write subset).

    Moves: with probability ``sched.swap_prob`` swap one chosen write level
    for an unused one, otherwise move one threshold by N(0, proposal_sigma)
    log10 ohms rounded to whole read cells (never zero). ``init`` is an optional
    ``(write_indices, edge_indices)`` starting design; by default writes are
    spread over the support of ``analog`` (the analog-channel optimum) and
    thresholds start at output quantiles. Returns the best design visited,
    re-scored at the final tolerance, with its best-so-far trace.
    """
    _check_counts(ch, n_reads, n_writes)
    obj = _Objective(ch, eval_tol)
    n_rows, n_cells = ch.n_writes, ch.n_reads
    if init is None:
        if analog is None:
            analog = blahut_arimoto(ch, tol=eval_tol)
        writes = _initial_writes(n_writes, analog)
        edges = _initial_edges(obj.cum[list(writes)], n_reads)
    else:
        writes = tuple(sorted(int(w) for w in init[0]))
        edges = tuple(sorted(int(e) for e in init[1]))
        if len(writes) != n_writes or len(edges) != n_reads - 1:
            raise InvalidCounts("initial design does not match n_reads / n_writes")

    rng = np.random.default_rng(sched.seed)
    cur_w, cur_e = writes, edges
    cur_val = obj(cur_w, cur_e)
    best = (cur_val, cur_w, cur_e)
    trace = [cur_val]
    can_swap = n_writes < n_rows
    can_move = n_reads - 1 < n_cells - 1
    # threshold moves in read cells; always at least one cell
    step_cells = sched.proposal_sigma / float(np.median(np.diff(ch.r_grid)))
    temp = sched.initial_temp
    for _ in range(sched.n_temps):
        for _ in range(sched.steps_per_temp):
            if can_swap and (not can_move or rng.random() < sched.swap_prob):
                pos = rng.integers(n_writes)
                unused = np.setdiff1d(np.arange(n_rows), cur_w, assume_unique=True)
                new = list(cur_w)
                new[pos] = int(unused[rng.integers(unused.size)])
                prop = (tuple(sorted(new)), cur_e)
            elif can_move:
                k = rng.integers(n_reads - 1)
                step = int(round(rng.normal(0.0, step_cells)))
                if step == 0:
                    step = 1 if rng.random() < 0.5 else -1
                j = int(np.clip(cur_e[k] + step, 1, n_cells - 1))
                if j in cur_e:
                    trace.append(best[0])
                    continue
                new = list(cur_e)
                new[k] = j
                prop = (cur_w, tuple(sorted(new)))
            else:
                trace.append(best[0])
                continue
            val = obj(*prop, warm=(cur_w, obj.probs(cur_w, cur_e)))
            delta = val - cur_val
            if delta >= 0 or rng.random() < math.exp(delta / temp):
                cur_w, cur_e, cur_val = prop[0], prop[1], val
                if val > best[0]:
                    best = (val, cur_w, cur_e)
            trace.append(best[0])
        temp *= sched.cooling_rate
    return obj.design(best[1], best[2], trace=np.array(trace))


def search_space_size(ch: ConditionalChannel, n_reads: int, n_writes: int) -> int:
    return math.comb(ch.n_reads - 1, n_reads - 1) * math.comb(ch.n_writes, n_writes)


def exhaustive_read_levels(
    ch: ConditionalChannel,
    n_reads: int,
    n_writes: int,
    *,
    tol: float = FINAL_TOL,
    max_space: int = MAX_SEARCH_SPACE,
) -> LevelDesign:
    """Global optimum over grid-aligned thresholds and all write subsets.

    Brute force; refuses search spaces larger than ``max_space`` designs.
    """
    _check_counts(ch, n_reads, n_writes)
    size = search_space_size(ch, n_reads, n_writes)
    if size > max_space:
        raise SearchSpaceTooLarge(f"{size} designs exceed the limit of {max_space}")
    obj = _Objective(ch, tol)
    best = (-np.inf, None, None)
    for writes in itertools.combinations(range(ch.n_writes), n_writes):
        for edges in itertools.combinations(range(1, ch.n_reads), n_reads - 1):
            val = obj(writes, edges)
            if val > best[0]:
                best = (val, writes, edges)
    return obj.design(best[1], best[2])


def _cell_seed(seed, n_writes, n_reads) -> int:
    ss = np.random.SeedSequence([int(seed), int(n_writes), int(n_reads)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def capacity_surface(
    ch: ConditionalChannel,
    reads_list,
    writes_list,
    sched: AnnealSchedule = AnnealSchedule(),
    *,
    analog: CapacityResult | None = None,
    eval_tol: float = EVAL_TOL,
) -> list[LevelDesign]:
    """One annealed design per (n_writes, n_reads) pair.

    For each write count the read counts are visited in ascending order and
    every anneal starts from the previous optimum refined with extra
    thresholds, so capacities along a row can only rise (up to solver
    tolerance). Each cell anneals with its own seed derived from
    ``sched.seed`` and the counts.
    """
    reads_list = sorted({int(r) for r in reads_list})
    writes_list = sorted({int(w) for w in writes_list})
    if not reads_list or not writes_list:
        raise InvalidCounts("reads_list and writes_list must be non-empty")
    if analog is None:
        analog = blahut_arimoto(ch, tol=eval_tol)
    out = []
    for n_writes in writes_list:
        prev = None
        for n_reads in reads_list:
            cell_sched = sched.with_seed(_cell_seed(sched.seed, n_writes, n_reads))
            init = None
            if prev is not None:
                init = (prev.write_indices, refine_edges(ch, prev.write_indices, prev.edge_indices, n_reads))
            design = optimize_read_levels(
                ch, n_reads, n_writes, cell_sched, init=init, analog=analog, eval_tol=eval_tol
            )
            out.append(design)
            prev = design
    return out


def write_surface_csv(designs, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SURFACE_CSV_HEADER)
        for d in designs:
            w.writerow((
                d.n_writes,
                d.n_reads,
                repr(d.capacity_bits),
                json.dumps(d.read_thresholds.tolist()),
                json.dumps(list(d.write_indices)),
            ))
