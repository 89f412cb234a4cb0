"""Streaming COMA runs: synthetic generators, CSV sources and the block-shift study.

Three ways of wiring conformal updates to the aggregator:

``decentralized-tracking``
    each expert tracks its own score quantile from its own misses;
``decentralized-aci``
    each expert runs ACI on its own miscoverage level;
``direct-aci``
    one shared level, updated from the merged set's misses.

Experts are least-squares fits on a rolling window of the most recent
observations, refit every round.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import SimConfig
from .conformal import Dataset, PredictorSpec, calibrate, fit_predictor, interval
from .errors import ConfigError, DataError
from .intervals import IntervalSet, measure
from .online import (
    AciState,
    HedgeState,
    LossTransform,
    QuantileTrackerState,
    aci_update,
    coma_round,
    hedge_init,
    hedge_weights,
    local_coverage_series,
    quantile_track_update,
)
from .sims import SimReport, substream

MODES = ("direct-aci", "decentralized-aci", "decentralized-tracking")
_LS = PredictorSpec("least-squares")


@dataclass(frozen=True)
class Stream:
    """Time-ordered rows: covariates ``x`` (T x d) named ``names``, response ``y``."""

    x: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.y)


# -- sources ---------------------------------------------------------------------


def block_schedule(T: int) -> np.ndarray:
    """Active covariate (1 or 2) per time step.

    Two blocks of 50 (x1 then x2), one more x1 block of 50, then blocks of 100
    alternating x2, x1, x2, ... so x1 is active on [0,50), [100,150),
    [250,350), [450,550), ... and x2 on [50,100), [150,250), [350,450), ...
    """
    active = np.empty(T, dtype=int)
    for t in range(T):
        if t < 150:
            active[t] = 1 if (t // 50) % 2 == 0 else 2
        else:
            active[t] = 2 if ((t - 150) // 100) % 2 == 0 else 1
    return active


def block_bounds(T: int) -> list[tuple[int, int, int]]:
    """``(start, stop, active)`` runs of :func:`block_schedule`."""
    act = block_schedule(T)
    out = []
    start = 0
    for t in range(1, T + 1):
        if t == T or act[t] != act[start]:
            out.append((start, t, int(act[start])))
            start = t
    return out


def synthetic_stream(kind: str, T: int, rng: np.random.Generator, symmetric: bool = False) -> Stream:
    """Synthetic sources.

    ``shift``: ``y = 2 x_a + e`` where the active covariate ``a`` follows
    :func:`block_schedule` (with ``symmetric``, ``y = x1 + x2 + e`` throughout).
    ``iid``: ``y = 2 x1 + 0.5 e`` with two irrelevant covariates, so the
    expert on ``x1`` is strictly best.  ``constant``: every row identical.
    """
    if kind == "shift":
        x = rng.standard_normal((T, 2))
        e = rng.standard_normal(T)
        if symmetric:
            y = x[:, 0] + x[:, 1] + e
        else:
            act = block_schedule(T)
            y = 2 * np.where(act == 1, x[:, 0], x[:, 1]) + e
        return Stream(x, y, ("x1", "x2"))
    if kind == "iid":
        x = rng.standard_normal((T, 3))
        y = 2 * x[:, 0] + 0.5 * rng.standard_normal(T)
        return Stream(x, y, ("x1", "x2", "x3"))
    if kind == "constant":
        return Stream(np.ones((T, 2)), np.full(T, 3.0), ("x1", "x2"))
    raise ConfigError(f"online.source: unknown synthetic generator {kind!r}")


def read_stream_csv(text: str, origin: str = "<stream>") -> Stream:
    """Parse ``t,x1,...,xd,y`` rows; rows must be in time order."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{origin}: empty stream file") from None
    if len(header) < 3 or header[0] != "t" or header[-1] != "y":
        raise DataError(f"{origin}:1: header must be t,x1,...,xd,y; got {','.join(header)}")
    rows, last_t = [], -math.inf
    for lineno, row in enumerate(reader, 2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{origin}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise DataError(f"{origin}:{lineno}: non-numeric field in {row}") from None
        if any(math.isnan(v) or math.isinf(v) for v in vals):
            raise DataError(f"{origin}:{lineno}: non-finite value")
        if vals[0] < last_t:
            raise DataError(f"{origin}:{lineno}: rows out of time order")
        last_t = vals[0]
        rows.append(vals)
    if not rows:
        raise DataError(f"{origin}: no data rows")
    arr = np.asarray(rows)
    return Stream(arr[:, 1:-1], arr[:, -1], tuple(header[1:-1]))


def load_source(cfg: SimConfig, rng: np.random.Generator) -> Stream:
    src = cfg.source
    if src.startswith("synthetic:"):
        # T counts prediction rounds; the warm-up window comes on top
        return synthetic_stream(src.partition(":")[2], cfg.T + cfg.window, rng, cfg.symmetric)
    try:
        with open(src) as fh:
            text = fh.read()
    except OSError as e:
        raise DataError(f"{src}: {e.strerror}") from None
    return read_stream_csv(text, src)


# -- experts ---------------------------------------------------------------------


def parse_experts(spec: str, names: Sequence[str]) -> list[list[str]]:
    """``"x1|x2|x1,lag1"`` -> feature lists; ``lagk`` is ``y`` lagged by k steps."""
    experts = []
    for chunk in spec.split("|"):
        feats = [f.strip() for f in chunk.split(",") if f.strip()]
        if not feats:
            raise ConfigError(f"online.experts: empty expert in {spec!r}")
        for f in feats:
            if f not in names and not (f.startswith("lag") and f[3:].isdigit() and int(f[3:]) > 0):
                raise ConfigError(f"online.experts: unknown feature {f!r}")
        experts.append(feats)
    return experts


def _design(stream: Stream, feats: list[str]) -> tuple[np.ndarray, int]:
    """Feature matrix for every row plus the number of leading rows lost to lags."""
    cols, lost = [], 0
    for f in feats:
        if f in stream.names:
            cols.append(stream.x[:, stream.names.index(f)])
        else:
            k = int(f[3:])
            lost = max(lost, k)
            lagged = np.full(len(stream), np.nan)
            lagged[k:] = stream.y[:-k]
            cols.append(lagged)
    return np.column_stack(cols), lost


def _window_split(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # interleave so that training and calibration halves cover the same stretch of time
    return idx[0::2], idx[1::2]


# -- the stream driver -------------------------------------------------------------


@dataclass
class StreamRun:
    """Per-round traces of one stream."""

    t: np.ndarray
    levels: np.ndarray  # rounds x K (alpha_t, alpha_k or q_k)
    weights: np.ndarray  # rounds x K
    expert_loss: np.ndarray  # rounds x K (transformed)
    expert_len: np.ndarray  # rounds x K (inf for the full line)
    expert_hit: np.ndarray
    merged: list[IntervalSet]
    merged_len: np.ndarray
    hit: np.ndarray
    h: np.ndarray
    m: np.ndarray
    delta: np.ndarray
    eta: np.ndarray
    alpha_final: Optional[float]
    length_bound_violations: int
    length_bound_skipped: int
    hedge: HedgeState

    def records_csv(self) -> str:
        K = self.weights.shape[1]
        head = (
            ["t"] + [f"level_{k + 1}" for k in range(K)]
            + ["merged", "measure", "hit", "h", "m", "delta", "eta"]
            + [f"w_{k + 1}" for k in range(K)]
        )
        out = [",".join(head)]
        for i in range(len(self.t)):
            s = self.merged[i]
            if s.full:
                merged = "-inf:inf"
            else:
                merged = ";".join(f"{lo!r}:{hi!r}" for lo, hi in s.parts)
            row = (
                [str(int(self.t[i]))]
                + [repr(float(v)) for v in self.levels[i]]
                + [merged, repr(float(self.merged_len[i])), str(int(self.hit[i]))]
                + [repr(float(v)) for v in (self.h[i], self.m[i], self.delta[i], self.eta[i])]
                + [repr(float(v)) for v in self.weights[i]]
            )
            out.append(",".join(row))
        return "\n".join(out) + "\n"


def run_coma_stream(
    stream: Stream,
    experts: list[list[str]],
    mode: str,
    alpha: float,
    gamma: float,
    transform: LossTransform,
    window: int = 100,
    eta: Optional[float] = None,
    eps: float = 0.1,
    rng: Optional[np.random.Generator] = None,
) -> StreamRun:
    """Run one COMA variant over ``stream`` and return per-round traces.

    Round ``t`` uses only rows before ``t``: experts are refit on the last
    ``window`` rows, sets are built at the current levels, merged with the
    current weights, and only then is ``y[t]`` revealed.  ``rng`` (when given)
    draws the vote randomization ``u``; otherwise ``u = 0``.
    """
    if mode not in MODES:
        raise ConfigError(f"online.mode: unknown mode {mode!r}")
    K = len(experts)
    designs = [_design(stream, f) for f in experts]
    start = window + max(lost for _, lost in designs)
    if len(stream) <= start:
        raise DataError(f"stream has {len(stream)} rows; need more than {start}")
    y = stream.y

    hedge = hedge_init(K, eta)
    shared = AciState.start(alpha, gamma)
    own = [AciState.start(alpha, gamma) for _ in range(K)]
    trackers: list[QuantileTrackerState] = []

    rows = range(start, len(stream))
    R = len(rows)
    levels = np.zeros((R, K))
    weights = np.zeros((R, K))
    e_loss = np.zeros((R, K))
    e_len = np.zeros((R, K))
    e_hit = np.zeros((R, K), dtype=bool)
    merged_sets: list[IntervalSet] = []
    merged_len = np.zeros(R)
    hit = np.zeros(R, dtype=bool)
    h = np.zeros(R)
    m = np.zeros(R)
    delta = np.zeros(R)
    etas = np.zeros(R)
    violations = skipped = 0

    for i, t in enumerate(rows):
        idx = np.arange(t - window, t)
        sets = []
        for k, (X, _) in enumerate(designs):
            if mode == "decentralized-tracking":
                model = fit_predictor(_LS, Dataset(X[idx], y[idx]))
                center = float(model(X[t : t + 1])[0])
                if not trackers or len(trackers) <= k:
                    # start from the split-conformal radius on the first window
                    tr, ca = _window_split(idx)
                    init = calibrate(fit_predictor(_LS, Dataset(X[tr], y[tr])), Dataset(X[ca], y[ca]), alpha)
                    q0 = init.radius if not init.infinite else float(init.scores[-1])
                    trackers.append(QuantileTrackerState(q0, alpha, gamma, decaying=True, eps=eps))
                levels[i, k] = trackers[k].q
                sets.append(interval(center, trackers[k].q))
            else:
                tr, ca = _window_split(idx)
                model = calibrate(fit_predictor(_LS, Dataset(X[tr], y[tr])), Dataset(X[ca], y[ca]), alpha)
                level = shared.alpha_t if mode == "direct-aci" else own[k].alpha_t
                levels[i, k] = level
                center = float(model.predict(X[t : t + 1])[0])
                sets.append(interval(center, model.radius_at(level)))

        u = float(rng.uniform()) if rng is not None else 0.0
        merged, hedge_next, rec = coma_round(hedge, sets, u, transform)

        yt = float(y[t])
        hit[i] = yt in merged
        for k, s in enumerate(sets):
            e_hit[i, k] = yt in s
            e_len[i, k] = math.inf if s.full else measure(s)
        if mode == "direct-aci":
            shared = aci_update(shared, not hit[i])
        elif mode == "decentralized-aci":
            own = [aci_update(a, not e_hit[i, k]) for k, a in enumerate(own)]
        else:
            trackers = [quantile_track_update(q, not e_hit[i, k], i + 1) for k, q in enumerate(trackers)]

        if np.isinf(e_len[i]).any() or merged.full:
            skipped += 1
        elif rec.merged_measure > 2 * math.fsum(np.asarray(rec.weights) * e_len[i]):
            violations += 1

        weights[i] = rec.weights
        e_loss[i] = rec.losses.losses
        merged_sets.append(merged)
        merged_len[i] = rec.merged_measure
        h[i], m[i], delta[i], etas[i] = rec.h, rec.m, rec.delta, rec.eta
        hedge = hedge_next

    return StreamRun(
        t=np.asarray(rows),
        levels=levels,
        weights=weights,
        expert_loss=e_loss,
        expert_len=e_len,
        expert_hit=e_hit,
        merged=merged_sets,
        merged_len=merged_len,
        hit=hit,
        h=h,
        m=m,
        delta=delta,
        eta=etas,
        alpha_final=shared.alpha_t if mode == "direct-aci" else None,
        length_bound_violations=violations,
        length_bound_skipped=skipped,
        hedge=hedge,
    )


def telescoping_bound(run: StreamRun, alpha: float, gamma: float) -> tuple[float, float]:
    """``(|miscoverage - alpha|, range(alpha_t) / (gamma T))`` for a direct-ACI run.

    ``alpha_{T+1} - alpha_1 = gamma (T alpha - sum miss)``, so the gap between
    empirical miscoverage and the target is at most the range of the level
    path (endpoint included) over ``gamma T``.
    """
    T = len(run.hit)
    miscov = 1.0 - float(run.hit.mean())
    path = np.append(run.levels[:, 0], run.alpha_final)
    if gamma == 0:
        return abs(miscov - alpha), math.inf
    return abs(miscov - alpha), float(path.max() - path.min()) / (gamma * T)


def run_stream(cfg: SimConfig, source: Optional[Stream] = None) -> tuple[SimReport, StreamRun]:
    """Run the configured COMA variant end to end on a CSV or synthetic source."""
    seed = cfg.require_seed()
    stream = source if source is not None else load_source(cfg, substream(seed, 0, "source"))
    experts = parse_experts(cfg.experts, stream.names)
    rng = substream(seed, 0, "vote") if cfg.randomize else None
    run = run_coma_stream(
        stream,
        experts,
        cfg.mode,
        cfg.alpha,
        cfg.gamma,
        LossTransform.parse(cfg.transform),
        window=cfg.window,
        eta=cfg.eta,
        eps=cfg.eps,
        rng=rng,
    )
    T = len(run.hit)
    rep = SimReport(cfg, T)
    rep.coverage["merged"] = float(run.hit.mean())
    finite = np.isfinite(run.merged_len)
    rep.avg_length["merged"] = float(run.merged_len[finite].mean()) if finite.any() else math.inf
    rep.expert_coverage = [float(v) for v in run.expert_hit.mean(axis=0)]
    rep.expert_length = [
        float(col[np.isfinite(col)].mean()) if np.isfinite(col).any() else math.inf
        for col in run.expert_len.T
    ]
    for k, w in enumerate(hedge_weights(run.hedge), 1):
        rep.summary[f"final_weight.{k}"] = float(w)
    rep.summary["unbounded_rounds"] = int((~finite).sum())
    rep.summary["length_bound_violations"] = run.length_bound_violations
    rep.summary["length_bound_skipped"] = run.length_bound_skipped
    rep.summary["hedge_loss"] = float(run.h.sum())
    rep.summary["best_expert_loss"] = float(run.expert_loss.sum(axis=0).min())
    if cfg.mode == "direct-aci":
        gap, bound = telescoping_bound(run, cfg.alpha, cfg.gamma)
        rep.summary["miscoverage_gap"] = gap
        rep.summary["telescoping_bound"] = bound
    ts, lc = local_coverage_series(run.hit, cfg.halfwidth)
    rep.series["local_coverage"] = (run.t[ts], lc)
    for k in range(run.weights.shape[1]):
        rep.series[f"w_{k + 1}"] = (run.t, run.weights[:, k])
    return rep, run


# -- block-shift study ---------------------------------------------------------------


def run_block_shift(cfg: SimConfig) -> SimReport:
    """Two covariates taking turns as the driver of ``y``; one linear expert per covariate.

    Each replication runs decentralized ACI (step ``gamma``) on split-conformal
    intervals from the last ``window`` rows, charges each expert the Gamma-CDF
    of its interval length, and learns weights with AdaHedge.  The report
    carries mean weight and mean cumulative-loss trajectories, and for each
    block after the warm-up the smallest mean weight of the matching expert
    over the block's second half.
    """
    seed = cfg.require_seed()
    transform = LossTransform.parse(cfg.transform)
    W = L = None
    for b in range(cfg.B):
        rng = substream(seed, b, "blockshift")
        stream = synthetic_stream("shift", cfg.T, rng, cfg.symmetric)
        run = run_coma_stream(
            stream, [["x1"], ["x2"]], "decentralized-aci", cfg.alpha, cfg.gamma,
            transform, window=cfg.window, eta=cfg.eta,
        )
        cum = np.cumsum(run.expert_loss, axis=0)
        W = run.weights.copy() if W is None else W + run.weights
        L = cum if L is None else L + cum
    W /= cfg.B
    L /= cfg.B
    t = run.t
    rep = SimReport(cfg, cfg.B)
    rep.series["mean_w_1"] = (t, W[:, 0])
    rep.series["mean_w_2"] = (t, W[:, 1])
    rep.series["mean_L_1"] = (t, L[:, 0])
    rep.series["mean_L_2"] = (t, L[:, 1])
    rep.summary["mean_weight_1"] = float(W[:, 0].mean())
    rep.summary["mean_weight_2"] = float(W[:, 1].mean())
    if not cfg.symmetric:
        worst = math.inf
        for start, stop, active in block_bounds(cfg.T):
            if start < cfg.window:
                continue
            mid = start + (stop - start) // 2
            sel = (t >= mid) & (t < stop)
            v = float(W[sel, active - 1].min())
            rep.summary[f"block_{start}_{stop}.min_matching_weight"] = v
            worst = min(worst, v)
        rep.summary["min_matching_weight"] = worst
    # weight ordering against cumulative-loss ordering, on the mean paths
    lead = np.sign(W[:, 0] - W[:, 1]) == np.sign(L[:, 1] - L[:, 0])
    rep.summary["weight_follows_loss"] = float(lead.mean())
    return rep
