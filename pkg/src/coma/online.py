"""Online weight learning over prediction sets.

Hedge (fixed learning rate) and AdaHedge (learning rate ``ln K / Delta``
driven by the cumulative mixability gap) over set-size losses, the per-round
merge, adaptive conformal inference (ACI) on the miscoverage level, and
quantile tracking on the score quantile.

All state objects are immutable; every update returns a new one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DataError
from .intervals import IntervalSet, WeightVector, measure
from .merge import randomized_majority_vote
from .special import gamma_cdf

__all__ = [
    "HedgeState",
    "RoundLosses",
    "RoundRecord",
    "LossTransform",
    "AciState",
    "QuantileTrackerState",
    "RegretBound",
    "hedge_init",
    "hedge_weights",
    "hedge_update",
    "round_losses",
    "coma_round",
    "regret_bound",
    "aci_update",
    "quantile_track_update",
    "direct_aci_round",
    "local_coverage",
    "local_coverage_series",
]


# -- Hedge / AdaHedge ----------------------------------------------------------


@dataclass(frozen=True)
class HedgeState:
    """Cumulative losses ``L``, cumulative mixability gap ``Delta``, round ``t``.

    ``eta=None`` selects AdaHedge; a positive float fixes the learning rate.
    """

    L: tuple[float, ...]
    Delta: float = 0.0
    eta: Optional[float] = None
    t: int = 0

    @property
    def K(self) -> int:
        return len(self.L)

    @property
    def adaptive(self) -> bool:
        return self.eta is None

    def learning_rate(self) -> float:
        """Learning rate used for the next round's weights (``inf`` = follow the leader)."""
        if self.eta is not None:
            return self.eta
        if self.Delta <= 0:
            return math.inf
        return math.log(self.K) / self.Delta


def hedge_init(K: int, eta: Optional[float] = None) -> HedgeState:
    if K < 1:
        raise DataError("need at least one expert")
    if eta is not None and not eta > 0:
        raise DataError("fixed learning rate must be positive")
    return HedgeState(tuple([0.0] * K), 0.0, eta, 0)


def _softmin(L: np.ndarray, eta: float) -> np.ndarray:
    if math.isinf(eta):
        mask = L == L.min()
        return mask / mask.sum()
    z = np.exp(-eta * (L - L.min()))
    return z / z.sum()


def hedge_weights(s: HedgeState) -> WeightVector:
    """``w_k`` proportional to ``exp(-eta L_k)``, computed with the minimum subtracted."""
    w = _softmin(np.asarray(s.L, dtype=float), s.learning_rate())
    return WeightVector.from_masses(w)


@dataclass(frozen=True)
class RoundLosses:
    """One round's expert losses and the derived hedge and mix losses."""

    losses: tuple[float, ...]
    h: float
    m: float
    eta: float

    @property
    def hi(self) -> float:
        return max(self.losses)

    @property
    def lo(self) -> float:
        return min(self.losses)

    @property
    def range(self) -> float:
        return self.hi - self.lo

    @property
    def delta(self) -> float:
        return self.h - self.m


def round_losses(s: HedgeState, losses: Sequence[float]) -> RoundLosses:
    """Hedge loss ``w.l`` and mix loss ``-(1/eta) ln(w.exp(-eta l))`` under ``s``'s weights."""
    ell = np.asarray(losses, dtype=float)
    if ell.shape != (s.K,):
        raise DataError(f"expected {s.K} losses, got {ell.shape}")
    if np.isnan(ell).any() or (ell < 0).any() or np.isinf(ell).any():
        raise DataError(f"losses must be finite and nonnegative, got {ell}")
    eta = s.learning_rate()
    w = _softmin(np.asarray(s.L, dtype=float), eta)
    h = float(w @ ell)
    support = w > 0
    lo = float(ell[support].min())
    if math.isinf(eta):
        m = lo
    else:
        # log-sum-exp with the support minimum factored out
        m = lo - math.log(float(w[support] @ np.exp(-eta * (ell[support] - lo)))) / eta
    # Jensen gives lo <= m <= h; clip the last ulp of rounding
    m = min(max(m, lo), h)
    return RoundLosses(tuple(float(v) for v in ell), h, m, eta)


def hedge_update(s: HedgeState, losses: Sequence[float]) -> HedgeState:
    """Add this round's losses; in adaptive mode also add the mixability gap."""
    rl = round_losses(s, losses)
    L = tuple(a + b for a, b in zip(s.L, rl.losses))
    Delta = s.Delta + rl.delta if s.adaptive else s.Delta
    return HedgeState(L, Delta, s.eta, s.t + 1)


# -- loss transforms -------------------------------------------------------------


@dataclass(frozen=True)
class LossTransform:
    """Nondecreasing map from set measure to a loss; full-line sets get ``sup``."""

    kind: str
    fn: Callable[[float], float] = field(repr=False)
    sup: float

    def __call__(self, s: IntervalSet) -> float:
        if s.full:
            return self.sup
        return float(self.fn(measure(s)))

    @classmethod
    def identity(cls) -> LossTransform:
        return cls("identity", lambda x: x, math.inf)

    @classmethod
    def arctan(cls) -> LossTransform:
        return cls("arctan", math.atan, math.pi / 2)

    @classmethod
    def gamma_cdf(cls, shape: float = 0.1, rate: float = 0.1) -> LossTransform:
        return cls(f"gamma-cdf({shape},{rate})", lambda x: gamma_cdf(x, shape, rate), 1.0)

    @classmethod
    def custom(cls, fn: Callable[[float], float], bound: float) -> LossTransform:
        def checked(x):
            v = fn(x)
            if not 0 <= v <= bound:
                raise DataError(f"custom transform returned {v}, outside [0, {bound}]")
            return v

        return cls("custom-bounded", checked, bound)

    @classmethod
    def parse(cls, text: str) -> LossTransform:
        """``identity``, ``arctan`` or ``gamma-cdf:shape,rate``."""
        text = text.strip()
        if text == "identity":
            return cls.identity()
        if text == "arctan":
            return cls.arctan()
        if text.startswith("gamma-cdf"):
            args = text.partition(":")[2]
            if not args:
                return cls.gamma_cdf()
            shape, rate = (float(v) for v in args.split(","))
            return cls.gamma_cdf(shape, rate)
        raise DataError(f"unknown loss transform {text!r}")


# -- one COMA round ----------------------------------------------------------------


@dataclass(frozen=True)
class RoundRecord:
    weights: tuple[float, ...]
    losses: RoundLosses
    merged_measure: float  # inf for the full line

    @property
    def h(self) -> float:
        return self.losses.h

    @property
    def m(self) -> float:
        return self.losses.m

    @property
    def delta(self) -> float:
        return self.losses.delta

    @property
    def eta(self) -> float:
        return self.losses.eta


def coma_round(
    s: HedgeState,
    sets: Sequence[IntervalSet],
    u: float = 0.0,
    transform: LossTransform = LossTransform.identity(),
) -> tuple[IntervalSet, HedgeState, RoundRecord]:
    """Merge with the current weights, then charge each expert its transformed set size.

    The merged set's own size is recorded but never fed back into the weights.
    """
    if len(sets) != s.K:
        raise DataError(f"expected {s.K} sets, got {len(sets)}")
    w = hedge_weights(s)
    merged = randomized_majority_vote(sets, w, u)
    ell = [transform(c) for c in sets]
    rl = round_losses(s, ell)
    s2 = hedge_update(s, ell)
    lm = math.inf if merged.full else measure(merged)
    return merged, s2, RoundRecord(w.w, rl, lm)


# -- regret bound -----------------------------------------------------------------


@dataclass(frozen=True)
class RegretBound:
    H: float
    L_star: float
    L_plus: float
    L_minus: float
    S: float
    bound: float
    K: int

    @property
    def regret(self) -> float:
        return self.H - self.L_star


def regret_bound(history: Sequence[RoundLosses], K: int) -> RegretBound:
    """Data-dependent AdaHedge guarantee on the cumulative hedge loss.

    ``L* + 2 sqrt(S ln K (L+ - L*)(L* - L-) / (L+ - L-)) + S (16/3 ln K + 2)``.
    """
    if not history:
        raise DataError("regret bound needs a nonempty history")
    ells = np.asarray([r.losses for r in history], dtype=float)
    H = math.fsum(r.h for r in history)
    L = ells.sum(axis=0)
    L_star = float(L.min())
    L_plus = math.fsum(ells.max(axis=1))
    L_minus = math.fsum(ells.min(axis=1))
    S = float((ells.max(axis=1) - ells.min(axis=1)).max())
    lnK = math.log(K)
    denom = L_plus - L_minus
    middle = 0.0
    if denom > 0:
        middle = 2 * math.sqrt(max(0.0, S * lnK * (L_plus - L_star) * (L_star - L_minus) / denom))
    bound = L_star + middle + S * (16 / 3 * lnK + 2)
    return RegretBound(H, L_star, L_plus, L_minus, S, bound, K)


# -- ACI and quantile tracking ---------------------------------------------------


@dataclass(frozen=True)
class AciState:
    """Target ``alpha``, current level ``alpha_t`` (never clamped), step ``gamma``."""

    alpha: float
    alpha_t: float
    gamma: float

    @classmethod
    def start(cls, alpha: float, gamma: float) -> AciState:
        if not gamma >= 0:
            raise DataError("ACI step must be nonnegative")
        return cls(alpha, alpha, gamma)


def aci_update(s: AciState, miss: bool) -> AciState:
    """``alpha_t + gamma (alpha - 1{miss})``."""
    return replace(s, alpha_t=s.alpha_t + s.gamma * (s.alpha - float(bool(miss))))


@dataclass(frozen=True)
class QuantileTrackerState:
    """Score quantile ``q``; step ``gamma`` fixed or ``gamma * t^(-1/2 - eps)``."""

    q: float
    alpha: float
    gamma: float
    decaying: bool = False
    eps: float = 0.1

    def __post_init__(self):
        if self.decaying and not 0 < self.eps < 0.5:
            raise DataError("decay exponent eps must lie in (0, 1/2)")

    def step(self, t: int) -> float:
        if not self.decaying:
            return self.gamma
        if t < 1:
            raise DataError("decaying step needs t >= 1")
        return self.gamma * t ** (-0.5 - self.eps)


def quantile_track_update(s: QuantileTrackerState, miss: bool, t: int) -> QuantileTrackerState:
    """``q + gamma_t (1{miss} - alpha)``."""
    return replace(s, q=s.q + s.step(t) * (float(bool(miss)) - s.alpha))


def direct_aci_round(
    agg: AciState,
    experts: Sequence[Callable[[float], IntervalSet]],
    weights,
    u: float = 0.0,
    y: Optional[float] = None,
) -> tuple[IntervalSet, list[IntervalSet], AciState]:
    """Experts emit sets at the shared level ``alpha_t``; the merged set drives ACI.

    ``experts[k](level)`` returns expert k's set for the current point.  With
    ``y`` given the state is updated on the merged set's miss indicator;
    otherwise it is returned unchanged.
    """
    sets = [e(agg.alpha_t) for e in experts]
    merged = randomized_majority_vote(sets, weights, u)
    if y is None:
        return merged, sets, agg
    return merged, sets, aci_update(agg, y not in merged)


# -- diagnostics -------------------------------------------------------------------


def local_coverage(hits: Sequence[bool], t: int, halfwidth: int) -> float:
    """Mean hit rate over positions ``t - halfwidth + 1 .. t + halfwidth`` (0-based)."""
    lo, hi = t - halfwidth + 1, t + halfwidth
    if halfwidth < 1 or lo < 0 or hi >= len(hits):
        raise DataError(f"window [{lo}, {hi}] outside 0..{len(hits) - 1}")
    return float(np.mean(np.asarray(hits[lo : hi + 1], dtype=float)))


def local_coverage_series(hits: Sequence[bool], halfwidth: int) -> tuple[np.ndarray, np.ndarray]:
    """``(t, localCov(t))`` for every ``t`` whose window fits in the sequence."""
    h = np.asarray(hits, dtype=float)
    n = len(h)
    width = 2 * halfwidth
    if n < width:
        return np.arange(0), np.zeros(0)
    csum = np.concatenate([[0.0], np.cumsum(h)])
    ts = np.arange(halfwidth - 1, n - halfwidth)
    vals = (csum[ts + halfwidth + 1] - csum[ts - halfwidth + 1]) / width
    return ts, vals
