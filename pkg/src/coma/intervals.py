"""Finite unions of closed real intervals and weighted coverage profiles.

Every merge rule in the package is a cut of the step function
``y -> sum_k w_k 1{y in C_k}``.  That function is built once by a sweep over
the sorted endpoints (:func:`coverage_profile`) and then cut at a threshold
(:func:`superlevel`).  Levels are summed with :func:`math.fsum`, so a level is
the correctly rounded sum of the active weights regardless of the order in
which sets open and close.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DataError, UnboundedMeasure

__all__ = [
    "Interval",
    "IntervalSet",
    "WeightVector",
    "CoverageProfile",
    "normalize",
    "measure",
    "coverage_profile",
    "superlevel",
    "EMPTY",
    "FULL_LINE",
]


class Interval(NamedTuple):
    lo: float
    hi: float


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, disjoint, non-touching closed intervals.

    ``full=True`` is the whole real line; ``parts`` is then empty.  Build
    instances through :func:`normalize` (or :meth:`of`) rather than directly.
    """

    parts: tuple[Interval, ...] = ()
    full: bool = False

    @classmethod
    def of(cls, *pairs: tuple[float, float]) -> IntervalSet:
        return normalize(pairs)

    @classmethod
    def point(cls, y: float) -> IntervalSet:
        return normalize([(y, y)])

    @property
    def is_empty(self) -> bool:
        return not self.full and not self.parts

    def __contains__(self, y: float) -> bool:
        if self.full:
            return True
        # parts are sorted, a linear scan is fine for the handful we carry
        for lo, hi in self.parts:
            if y < lo:
                return False
            if y <= hi:
                return True
        return False

    def contains_many(self, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        if self.full:
            return np.ones(ys.shape, dtype=bool)
        out = np.zeros(ys.shape, dtype=bool)
        for lo, hi in self.parts:
            out |= (ys >= lo) & (ys <= hi)
        return out

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __repr__(self) -> str:
        if self.full:
            return "IntervalSet(full)"
        body = ", ".join(f"[{lo!r}, {hi!r}]" for lo, hi in self.parts)
        return f"IntervalSet({{{body}}})"


EMPTY = IntervalSet()
FULL_LINE = IntervalSet(full=True)


def normalize(parts: Iterable[tuple[float, float]]) -> IntervalSet:
    """Canonical union of closed intervals.

    Overlapping and touching intervals are merged.  Endpoints are compared
    exactly; nothing is snapped.  Infinite endpoints are rejected: the full
    line is :data:`FULL_LINE`, not ``(-inf, inf)``.
    """
    cleaned = []
    for part in parts:
        lo, hi = float(part[0]), float(part[1])
        if math.isnan(lo) or math.isnan(hi):
            raise DataError(f"NaN endpoint in interval {part!r}")
        if math.isinf(lo) or math.isinf(hi):
            raise DataError(f"infinite endpoint in interval {part!r}; use FULL_LINE")
        if lo > hi:
            raise DataError(f"interval with lo > hi: {part!r}")
        cleaned.append((lo, hi))
    cleaned.sort()
    merged: list[Interval] = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1].hi:
            if hi > merged[-1].hi:
                merged[-1] = Interval(merged[-1].lo, hi)
        else:
            merged.append(Interval(lo, hi))
    return IntervalSet(tuple(merged))


def measure(s: IntervalSet) -> float:
    """Lebesgue measure; raises :class:`UnboundedMeasure` on the full line."""
    if s.full:
        raise UnboundedMeasure("the full line has infinite measure")
    return math.fsum(hi - lo for lo, hi in s.parts)


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative weights summing to one."""

    w: tuple[float, ...]

    def __post_init__(self):
        if not self.w:
            raise DataError("weight vector must be nonempty")
        total = math.fsum(self.w)
        if any(x < 0 or math.isnan(x) for x in self.w):
            raise DataError(f"negative or NaN weight in {self.w}")
        if abs(total - 1.0) > 1e-9:
            raise DataError(f"weights sum to {total}, not 1")

    @classmethod
    def from_masses(cls, masses: Sequence[float]) -> WeightVector:
        masses = [float(x) for x in masses]
        if any(x < 0 or math.isnan(x) for x in masses):
            raise DataError(f"negative or NaN weight in {masses}")
        total = math.fsum(masses)
        if not total > 0:
            raise DataError("weights have zero total mass")
        return cls(tuple(x / total for x in masses))

    @classmethod
    def uniform(cls, k: int) -> WeightVector:
        return cls(tuple([1.0 / k] * k))

    @classmethod
    def one_hot(cls, k: int, index: int) -> WeightVector:
        w = [0.0] * k
        w[index] = 1.0
        return cls(tuple(w))

    def __len__(self) -> int:
        return len(self.w)

    def __iter__(self):
        return iter(self.w)

    def __getitem__(self, i):
        return self.w[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.w, dtype=float)


@dataclass(frozen=True)
class CoverageProfile:
    """Piecewise-constant function of y.

    ``at[i]`` is the value at ``breakpoints[i]``; ``between[j]`` is the value
    on the open cell left of breakpoint ``j`` (``between[0]`` is the left
    tail, ``between[-1]`` the right tail).  ``base`` is the constant
    contribution of full-line sets and is already included in every level.
    """

    breakpoints: tuple[float, ...]
    at: tuple[float, ...]
    between: tuple[float, ...]
    base: float = 0.0

    def __call__(self, y: float) -> float:
        i = np.searchsorted(self.breakpoints, y)
        if i < len(self.breakpoints) and self.breakpoints[i] == y:
            return self.at[i]
        return self.between[i]

    @property
    def max_level(self) -> float:
        return max(self.at + self.between)


def _weight_list(w, k: int) -> list[float]:
    vals = [float(x) for x in w]
    if len(vals) != k:
        raise DataError(f"{k} sets but {len(vals)} weights")
    if any(x < 0 or math.isnan(x) for x in vals):
        raise DataError("weights must be nonnegative")
    return vals


def coverage_profile(sets: Sequence[IntervalSet], w) -> CoverageProfile:
    """Sweep-line construction of ``y -> sum_k w_k 1{y in C_k}``.

    ``w`` may be a :class:`WeightVector` or any nonnegative masses (the
    profile is linear in them).  At a shared endpoint all openings are
    applied before the point level is read and closings only after, so
    closed intervals that merely touch still count as overlapping there.
    """
    weights = _weight_list(w, len(sets))
    base_members = [k for k, s in enumerate(sets) if s.full]
    base = math.fsum(weights[k] for k in base_members)

    events: list[tuple[float, int, int]] = []  # (x, kind, k); kind 0 open, 1 close
    for k, s in enumerate(sets):
        if s.full:
            continue
        for lo, hi in s.parts:
            events.append((lo, 0, k))
            events.append((hi, 1, k))
    events.sort()

    active = [0] * len(sets)
    for k in base_members:
        active[k] = 1

    def level() -> float:
        return math.fsum(weights[k] for k in range(len(sets)) if active[k])

    breakpoints: list[float] = []
    at: list[float] = []
    between: list[float] = [level()]
    i = 0
    while i < len(events):
        x = events[i][0]
        j = i
        while j < len(events) and events[j][0] == x and events[j][1] == 0:
            active[events[j][2]] += 1
            j += 1
        breakpoints.append(x)
        at.append(level())
        while j < len(events) and events[j][0] == x:
            active[events[j][2]] -= 1
            j += 1
        between.append(level())
        i = j
    return CoverageProfile(tuple(breakpoints), tuple(at), tuple(between), base)


def superlevel(p: CoverageProfile, t: float, strict: bool = True) -> IntervalSet:
    """``{y : p(y) > t}`` (or ``>= t`` when ``strict`` is false).

    Because every input interval is closed, the profile is upper
    semicontinuous: an included open cell always has included endpoints, so
    the result is again a finite union of closed intervals.
    """

    def keep(v: float) -> bool:
        return v > t if strict else v >= t

    if keep(p.between[0]) or keep(p.between[-1]):
        # a tail is in; the tails sit at the base level, below every other level
        return FULL_LINE
    parts: list[tuple[float, float]] = []
    start = None
    n = len(p.breakpoints)
    for i in range(n):
        x = p.breakpoints[i]
        if keep(p.at[i]):
            if start is None:
                start = x
            if not keep(p.between[i + 1]):
                parts.append((start, x))
                start = None
    return normalize(parts)
