"""Mutual information and Blahut-Arimoto channel capacity (bits)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import xlogy

from .channel import ConditionalChannel
from .errors import DegenerateChannel, DimensionMismatch, EmptyIndexSet, IndexOutOfRange, InvalidParams

SUPPORT_EPSILON = 1e-6
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100_000
_TINY = 1e-300
_KERNEL_MAX_SIZE = 8192


def _matrix(ch) -> np.ndarray:
    return ch.matrix if isinstance(ch, ConditionalChannel) else np.asarray(ch, dtype=float)


def check_input(probs, n_rows: int) -> np.ndarray:
    """Validate an input distribution over ``n_rows`` write levels."""
    p = np.asarray(probs, dtype=float).ravel()
    if p.size != n_rows:
        raise DimensionMismatch(f"input has {p.size} entries, channel has {n_rows} rows")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidParams("input probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidParams(f"input probabilities sum to {p.sum()!r}, not 1")
    return p


def row_divergence(W, q) -> np.ndarray:
    """D(W[v] || q) in bits for every row v; 0 log 0 = 0."""
    return (xlogy(W, W) - xlogy(W, np.maximum(q, _TINY))).sum(axis=1) / np.log(2)


def mutual_information(ch, probs) -> float:
    """I(V;R) in bits for input distribution ``probs``."""
    W = _matrix(ch)
    p = check_input(probs, W.shape[0])
    on = p > 0
    q = p @ W
    d = row_divergence(W[on], q)
    return max(0.0, float(p[on] @ d))


@dataclass(frozen=True, eq=False)
class CapacityResult:
    capacity_bits: float
    input_probs: np.ndarray
    iterations: int
    converged: bool
    support: np.ndarray
    upper_bound_bits: float
    lower_bounds: np.ndarray | None = None

    @property
    def support_size(self) -> int:
        return int(self.support.size)

    def to_dict(self) -> dict:
        return {
            "capacity_bits": self.capacity_bits,
            "input_probs": self.input_probs.tolist(),
            "support_indices": self.support.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
        }


@njit(cache=True)
def _arimoto_kernel(W, neg_h, tilt, p, tol, max_iter, lowers):
    n, m = W.shape
    q = np.empty(m)
    lq = np.empty(m)
    e = np.empty(n)
    upper = np.inf
    for it in range(max_iter):
        q[:] = 0.0
        for v in range(n):
            pv = p[v]
            for r in range(m):
                q[r] += pv * W[v, r]
        for r in range(m):
            # clamped so that W == 0 cells contribute exactly 0 below
            lq[r] = np.log2(max(q[r], _TINY))
        mx = -np.inf
        upper = -np.inf
        for v in range(n):
            acc = 0.0
            for r in range(m):
                acc += W[v, r] * lq[r]
            e[v] = neg_h[v] - acc - tilt[v]
            if e[v] > upper:
                upper = e[v]
            if p[v] > 0.0 and e[v] > mx:
                mx = e[v]
        z = 0.0
        for v in range(n):
            p[v] *= np.exp2(e[v] - mx)
            z += p[v]
        for v in range(n):
            p[v] /= z
        lower = mx + np.log2(z)
        if it < lowers.size:
            lowers[it] = lower
        if upper - lower < tol:
            return it + 1, True, upper
    return max_iter, False, upper


def _arimoto_numpy(W, neg_h, tilt, p, tol, max_iter, lowers):
    # same iteration as the kernel; BLAS matvecs win on large channels
    upper = np.inf
    for it in range(max_iter):
        e = neg_h - W @ np.log2(np.maximum(p @ W, _TINY)) - tilt
        upper = e.max()
        mx = e[p > 0].max()
        p *= np.exp2(e - mx)
        z = p.sum()
        p /= z
        lower = mx + np.log2(z)
        if it < lowers.size:
            lowers[it] = lower
        if upper - lower < tol:
            return it + 1, True, upper
    return max_iter, False, upper


def _arimoto(W, cost, s, tol, max_iter, p0=None, trace=False):
    """Blahut-Arimoto with the exponent tilted by ``-s * cost`` (bits).

    Returns (p, iterations, converged, upper, lower_trace). The stopping rule
    is the Arimoto gap ``max_v e_v - log2 sum_v p_v 2^e_v`` on the tilted
    exponent ``e_v = D(W_v || q) - s * cost_v``.
    """
    if tol <= 0:
        raise InvalidParams("tol must be positive")
    if max_iter < 1:
        raise InvalidParams("max_iter must be >= 1")
    W = np.ascontiguousarray(W, dtype=float)
    if not np.all(np.isfinite(W)) or np.any(W < 0):
        raise DegenerateChannel("channel contains NaN, infinite or negative mass")
    n = W.shape[0]
    neg_h = xlogy(W, W).sum(axis=1) / np.log(2)
    tilt = s * cost if s else np.zeros(n)
    if p0 is None:
        p = np.full(n, 1.0 / n)
    else:
        p = np.array(p0, dtype=float)
        p /= p.sum()
    lowers = np.full(int(max_iter) if trace else 0, np.nan)
    run = _arimoto_kernel if W.size <= _KERNEL_MAX_SIZE else _arimoto_numpy
    it, converged, upper = run(W, neg_h, tilt, p, float(tol), int(max_iter), lowers)
    return p, it, converged, upper, (lowers[:it].copy() if trace else None)


def _result(W, p, it, converged, upper, lowers, support_epsilon):
    support = np.flatnonzero(p > support_epsilon)
    cap = mutual_information(W, p)
    return CapacityResult(cap, p, it, converged, support, float(upper), lowers)


def blahut_arimoto(
    ch,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    support_epsilon: float = SUPPORT_EPSILON,
    trace: bool = False,
    p0=None,
) -> CapacityResult:
    """Channel capacity by Blahut-Arimoto, starting from the uniform input.

    Stops once Arimoto's upper bound ``max_v D(P(R|v) || P(R))`` is within
    ``tol`` bits of the lower bound, so the reported capacity is certified
    to ``tol``. ``trace=True`` records the lower bound per iteration.
    ``p0`` overrides the uniform start (used for warm starts).
    """
    W = _matrix(ch)
    p, it, conv, upper, lowers = _arimoto(W, None, 0.0, tol, max_iter, p0, trace)
    return _result(W, p, it, conv, upper, lowers, support_epsilon)


def blahut_arimoto_constrained(
    ch,
    cost,
    s: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    support_epsilon: float = SUPPORT_EPSILON,
    trace: bool = False,
    p0=None,
) -> tuple[CapacityResult, float]:
    """Cost-constrained capacity in Lagrangian form.

    ``s`` (bits per unit cost) tilts the update by ``2^(-s * cost[v])``; each
    ``s`` picks one point on the capacity-cost curve. Returns the result and
    the mean cost under its input. ``s = 0`` is plain Blahut-Arimoto.
    ``p0`` overrides the uniform start.
    """
    W = _matrix(ch)
    cost = np.asarray(cost, dtype=float).ravel()
    if cost.size != W.shape[0]:
        raise DimensionMismatch(f"cost has {cost.size} entries, channel has {W.shape[0]} rows")
    if not np.all(np.isfinite(cost)):
        raise InvalidParams("costs must be finite")
    if not (s >= 0 and np.isfinite(s)):
        raise InvalidParams(f"lagrange multiplier must be finite and >= 0, got {s!r}")
    p, it, conv, upper, lowers = _arimoto(W, cost, float(s), tol, max_iter, p0, trace)
    res = _result(W, p, it, conv, upper, lowers, support_epsilon)
    return res, float(p @ cost)


def uniform_capacity(ch, support=None, *, ba: CapacityResult | None = None) -> float:
    """Mutual information with the uniform input on ``support``.

    Without ``support`` the support of the Blahut-Arimoto optimum is used
    (pass ``ba`` to reuse an existing solve).
    """
    W = _matrix(ch)
    if support is None:
        if ba is None:
            ba = blahut_arimoto(W)
        support = ba.support
    idx = np.unique(np.asarray(list(support), dtype=int))
    if idx.size == 0:
        raise EmptyIndexSet("uniform input needs a non-empty support")
    if idx[0] < 0 or idx[-1] >= W.shape[0]:
        raise IndexOutOfRange("support index outside the channel")
    p = np.zeros(W.shape[0])
    p[idx] = 1.0 / idx.size
    return mutual_information(W, p)
