"""Static aggregation rules for K prediction sets.

All randomization is supplied by the caller (``u`` for vote rules, ``offset``
for risk rules); nothing in this module draws random numbers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractViolation, DataError
from .intervals import (
    FULL_LINE,
    IntervalSet,
    WeightVector,
    coverage_profile,
    normalize,
    superlevel,
)

__all__ = [
    "VoteThreshold",
    "BinomialQuantile",
    "BoundedLoss",
    "majority_vote",
    "randomized_majority_vote",
    "binomial_quantile",
    "binomial_cdf",
    "independent_merge",
    "risk_merge",
    "miscoverage_loss",
    "capped_distance_loss",
    "vote_matrix",
    "weight_objective",
    "optimize_weights",
]


@dataclass(frozen=True)
class VoteThreshold:
    """Cut level ``base + offset`` (vote rules) or ``base - offset`` (risk rules)."""

    base: float
    offset: float = 0.0
    risk: bool = False

    def __post_init__(self):
        if self.risk:
            if not 0 <= self.offset < self.base:
                raise DataError(f"risk offset must lie in [0, {self.base}), got {self.offset}")
        elif not 0 <= self.offset < 0.5:
            raise DataError(f"vote offset must lie in [0, 0.5), got {self.offset}")

    @property
    def value(self) -> float:
        return self.base - self.offset if self.risk else self.base + self.offset


def _weights(w, k: int) -> WeightVector:
    if not isinstance(w, WeightVector):
        w = WeightVector.from_masses(w)
    if len(w) != k:
        raise DataError(f"{k} sets but {len(w)} weights")
    return w


def majority_vote(sets: Sequence[IntervalSet], w) -> IntervalSet:
    """Points whose weighted vote strictly exceeds one half."""
    if not sets:
        raise DataError("majority vote needs at least one set")
    w = _weights(w, len(sets))
    return superlevel(coverage_profile(sets, w), 0.5, strict=True)


def randomized_majority_vote(sets: Sequence[IntervalSet], w, u: float) -> IntervalSet:
    """Weighted vote cut at ``(1 + u) / 2`` with ``u`` in ``[0, 1)``.

    Drawing ``u`` uniformly gives the randomized rule; ``u = 0`` is the plain
    majority vote.  The threshold ``1/2 + a`` with ``a ~ U(0, 1/2)`` is the
    same rule under ``u = 2a``.
    """
    if not 0.0 <= u < 1.0:
        raise DataError(f"u must lie in [0, 1), got {u}")
    if not sets:
        raise DataError("majority vote needs at least one set")
    w = _weights(w, len(sets))
    t = VoteThreshold(0.5, u / 2).value
    return superlevel(coverage_profile(sets, w), t, strict=True)


# -- independent sets ---------------------------------------------------------


def _log_binom_pmf(k: int, j: int, p: float, q: float) -> float:
    if p == 0.0:
        return 0.0 if j == 0 else -math.inf
    if q == 0.0:
        return 0.0 if j == k else -math.inf
    return (
        math.lgamma(k + 1)
        - math.lgamma(j + 1)
        - math.lgamma(k - j + 1)
        + j * math.log(p)
        + (k - j) * math.log(q)
    )


def binomial_cdf(k: int, p: float, q: Optional[float] = None) -> list[float]:
    """``[F(0), ..., F(k)]`` for Bin(k, p), summed in log space.

    ``q`` is the failure probability; pass it when it is known exactly so
    that ``1 - p`` does not pick up rounding error.
    """
    q = 1.0 - p if q is None else q
    logs = [_log_binom_pmf(k, j, p, q) for j in range(k + 1)]
    out = []
    acc = 0.0
    for lp in logs:
        acc += math.exp(lp)
        out.append(min(acc, 1.0))
    out[-1] = 1.0
    return out


@dataclass(frozen=True)
class BinomialQuantile:
    K: int
    alpha: float
    q: int

    @property
    def coverage(self) -> float:
        """``P(Bin(K, 1 - alpha) > q)``."""
        if self.q < 0:
            return 1.0
        return 1.0 - binomial_cdf(self.K, 1.0 - self.alpha, self.alpha)[self.q]


_CDF_RTOL = 1e-12


def binomial_quantile(K: int, alpha: float) -> BinomialQuantile:
    """Largest integer ``q`` in ``{-1, ..., K}`` with ``F(q) <= alpha``.

    ``F`` is the CDF of Bin(K, 1 - alpha) and ``F(-1) = 0``.  Taking the
    integer maximum keeps ``P(Bin > q) >= 1 - alpha`` true by construction.
    """
    if K < 1:
        raise DataError("K must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise DataError(f"alpha must lie in (0, 1), got {alpha}")
    cdf = binomial_cdf(K, 1.0 - alpha, alpha)
    q = -1
    for m, f in enumerate(cdf):
        # exact ties (K = 1 gives F(0) = alpha) must survive rounding in the sum
        if f <= alpha * (1 + _CDF_RTOL):
            q = m
        else:
            break
    return BinomialQuantile(K, alpha, q)


def independent_merge(sets: Sequence[IntervalSet], alpha: float) -> IntervalSet:
    """Unit-weight vote cut at the binomial quantile.

    Valid at level ``1 - alpha`` only when the inputs are independent with
    exact coverage ``1 - alpha``; that cannot be checked here and is the
    caller's responsibility.
    """
    K = len(sets)
    q = binomial_quantile(K, alpha).q
    # q = -1 would make the cut vacuous; the union (count > 0) is the
    # conservative reading
    return superlevel(coverage_profile(sets, [1.0] * K), max(q, 0), strict=True)


# -- bounded-loss (risk control) merge ----------------------------------------


@dataclass(frozen=True)
class BoundedLoss:
    """Loss ``L(C, y)`` with range ``[0, bound]`` and ``L(C, y) = 0`` for y in C.

    ``knots(C)`` may be given when ``L(C, .)`` is linear between the returned
    points (and beyond the outermost ones); :func:`risk_merge` then solves
    the cut exactly.  ``indicator=True`` marks the miscoverage loss, which
    is handled through the coverage profile.
    """

    bound: float
    evaluator: Callable[[IntervalSet, float], float]
    knots: Optional[Callable[[IntervalSet], Sequence[float]]] = None
    indicator: bool = False

    def __post_init__(self):
        if not self.bound > 0:
            raise DataError("loss bound must be positive")

    def __call__(self, s: IntervalSet, y: float) -> float:
        v = float(self.evaluator(s, y))
        if not (0.0 <= v <= self.bound):
            raise ContractViolation(f"loss returned {v}, outside [0, {self.bound}]")
        return v


def miscoverage_loss() -> BoundedLoss:
    return BoundedLoss(1.0, lambda s, y: 0.0 if y in s else 1.0, indicator=True)


def _distance(s: IntervalSet, y: float) -> float:
    if s.full or y in s:
        return 0.0
    if s.is_empty:
        return math.inf
    return min(lo - y if y < lo else y - hi for lo, hi in s.parts)


def capped_distance_loss(bound: float = 1.0) -> BoundedLoss:
    """``min(bound, dist(y, C))``; piecewise linear in y."""

    def knots(s: IntervalSet) -> list[float]:
        pts = []
        for lo, hi in s.parts:
            pts += [lo - bound, lo, hi, hi + bound]
        for (_, a), (b, _) in zip(s.parts, s.parts[1:]):
            pts.append(0.5 * (a + b))
        return pts

    return BoundedLoss(bound, lambda s, y: min(bound, _distance(s, y)), knots=knots)


def _aggregate(sets, w, loss, y) -> float:
    return math.fsum(wk * loss(s, y) for wk, s in zip(w, sets) if wk > 0)


def risk_merge(
    sets: Sequence[IntervalSet],
    w,
    loss: BoundedLoss,
    offset: float = 0.0,
    tol: float = 1e-9,
) -> IntervalSet:
    """``{y : sum_k w_k L(C_k, y) < B/2 - offset}``.

    Boundary points where the aggregate equals the threshold are returned as
    the closure of the strict set (they have measure zero).
    """
    w = _weights(w, len(sets))
    t = VoteThreshold(loss.bound / 2, offset, risk=True).value
    if loss.indicator:
        # sum_k w_k B 1{y not in C_k} < t  <=>  vote sum > 1 - t/B
        return superlevel(coverage_profile(sets, w), 1.0 - t / loss.bound, strict=True)
    if loss.knots is not None:
        return _risk_piecewise_linear(sets, w, loss, t)
    return _risk_numeric(sets, w, loss, t, tol)


def _endpoints(sets) -> list[float]:
    return sorted({x for s in sets if not s.full for part in s.parts for x in part})


def _risk_piecewise_linear(sets, w, loss, t) -> IntervalSet:
    knots = sorted({float(x) for s in sets if not s.full for x in loss.knots(s)})
    if not knots:
        g = _aggregate(sets, w, loss, 0.0)
        return FULL_LINE if g < t else IntervalSet()
    g = [_aggregate(sets, w, loss, x) for x in knots]
    # slopes beyond the outer knots
    g_left = _aggregate(sets, w, loss, knots[0] - 1.0)
    g_right = _aggregate(sets, w, loss, knots[-1] + 1.0)
    if g_left < t and g_left <= g[0]:
        raise DataError("risk set is unbounded to the left")
    if g_right < t and g_right <= g[-1]:
        raise DataError("risk set is unbounded to the right")

    parts = []
    if g_left < t:
        # linear tail rising to the left; crossing lies left of the first knot
        slope = g[0] - g_left
        parts.append((knots[0] - (t - g[0]) / slope, knots[0]))
    for i, x in enumerate(knots):
        if g[i] < t:
            parts.append((x, x))
        if i + 1 < len(knots):
            a, b = x, knots[i + 1]
            ga, gb = g[i], g[i + 1]
            if ga < t and gb < t:
                parts.append((a, b))
            elif ga < t <= gb:
                parts.append((a, a + (t - ga) / (gb - ga) * (b - a)))
            elif gb < t <= ga:
                parts.append((b - (t - gb) / (ga - gb) * (b - a), b))
    if g_right < t:
        slope = g_right - g[-1]
        parts.append((knots[-1], knots[-1] + (t - g[-1]) / slope))
    return normalize(parts)


def _risk_numeric(sets, w, loss, t, tol, subdivisions: int = 8) -> IntervalSet:
    ends = _endpoints(sets)
    if not ends:
        g = _aggregate(sets, w, loss, 0.0)
        return FULL_LINE if g < t else IntervalSet()
    span = max(ends[-1] - ends[0], 1.0)
    seeds = set(ends)
    for a, b in zip(ends, ends[1:]):
        for j in range(1, subdivisions):
            seeds.add(a + (b - a) * j / subdivisions)
    # probe outward until the aggregate stops being below the threshold
    for side, edge in ((-1, ends[0]), (1, ends[-1])):
        d = span / subdivisions
        while True:
            y = edge + side * d
            seeds.add(y)
            if _aggregate(sets, w, loss, y) >= t:
                break
            d *= 2
            if d > 1e6 * span:
                raise DataError("risk set appears unbounded")
    ys = sorted(seeds)
    inside = [_aggregate(sets, w, loss, y) < t for y in ys]

    def crossing(a: float, b: float, a_in: bool) -> float:
        while b - a > tol:
            mid = 0.5 * (a + b)
            if (_aggregate(sets, w, loss, mid) < t) == a_in:
                a = mid
            else:
                b = mid
        return a if a_in else b

    parts = []
    start = None
    for i, y in enumerate(ys):
        if inside[i] and start is None:
            start = y if i == 0 else crossing(ys[i - 1], y, False)
        if inside[i] and (i + 1 == len(ys) or not inside[i + 1]):
            end = y if i + 1 == len(ys) else crossing(y, ys[i + 1], True)
            parts.append((start, end))
            start = None
    return normalize(parts)


# -- size-minimizing weights on a simplex grid --------------------------------


def vote_matrix(index_sets: Sequence[Sequence[int]], p: int) -> np.ndarray:
    """K x p 0/1 matrix with row i the indicator of ``index_sets[i]`` (1-based)."""
    R = np.zeros((len(index_sets), p), dtype=np.int64)
    for i, members in enumerate(index_sets):
        for j in members:
            if not 1 <= j <= p:
                raise DataError(f"index {j} outside 1..{p}")
            R[i, j - 1] = 1
    return R


def weight_objective(w, R) -> int:
    """Number of columns whose weighted vote exceeds one half."""
    R = np.asarray(R, dtype=float)
    return int(np.sum(np.asarray(w, dtype=float) @ R > 0.5))


def _compositions(m: int, K: int):
    """All nonnegative integer K-tuples summing to m, in lexicographic order."""
    if K == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in _compositions(m - first, K - 1):
            yield (first,) + rest


MAX_GRID_K = 12


def optimize_weights(R, resolution: int, chunk: int = 65536) -> tuple[WeightVector, int]:
    """Exhaustive search over the simplex grid ``{v / m : sum v = m}``.

    The objective is a step function, so there is nothing to differentiate;
    every grid point is scored.  Comparisons use integers (``2 v.R > m``), so
    ties at exactly one half are decided without rounding.  Ties in the
    objective go to the lexicographically first grid point.
    """
    R = np.asarray(R)
    if R.ndim != 2 or not np.isin(R, (0, 1)).all():
        raise DataError("vote matrix must be a 2-d 0/1 array")
    K = R.shape[0]
    if K > MAX_GRID_K:
        raise DataError(f"grid search is limited to K <= {MAX_GRID_K}, got {K}")
    if resolution < 1:
        raise DataError("resolution must be a positive integer")
    R = R.astype(np.int64)
    best_v, best_obj = None, None
    gen = _compositions(resolution, K)
    while True:
        block = list(itertools.islice(gen, chunk))
        if not block:
            break
        V = np.asarray(block, dtype=np.int64)
        obj = np.sum(2 * (V @ R) > resolution, axis=1)
        i = int(np.argmin(obj))  # argmin returns the first minimum
        if best_obj is None or obj[i] < best_obj:
            best_obj, best_v = int(obj[i]), block[i]
    w = WeightVector(tuple(v / resolution for v in best_v))
    return w, best_obj
