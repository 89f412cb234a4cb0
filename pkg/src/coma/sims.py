"""Monte Carlo studies for the static merge rules.

Every replication draws from its own substream ``(seed, replication, role)``,
so results do not depend on the order in which replications run.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .config import SimConfig
from .conformal import (
    Dataset,
    KernelSmoother,
    PredictorSpec,
    calibrate,
    lasso_path,
    predict_interval,
)
from .intervals import IntervalSet, WeightVector, measure, normalize
from .merge import (
    binomial_quantile,
    independent_merge,
    majority_vote,
    randomized_majority_vote,
)


def substream(seed: int, replication: int, role: str) -> np.random.Generator:
    """Independent generator for one (replication, role) pair."""
    role_id = zlib.crc32(role.encode())
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replication, role_id)))


def mcse(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n)


def _g(v: float) -> str:
    return format(v, ".10g")


@dataclass
class SimReport:
    """Coverages, lengths and trajectories from one study.

    ``coverage[rule]`` is an empirical rate over ``trials`` draws; its Monte
    Carlo standard error is ``sqrt(p (1 - p) / trials)``.
    """

    config: SimConfig
    trials: int
    coverage: dict[str, float] = field(default_factory=dict)
    avg_length: dict[str, float] = field(default_factory=dict)
    expert_length: list[float] = field(default_factory=list)
    expert_coverage: list[float] = field(default_factory=list)
    summary: dict[str, object] = field(default_factory=dict)
    series: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def mcse(self, rule: str) -> float:
        return mcse(self.coverage[rule], self.trials)

    def summary_lines(self) -> list[str]:
        lines = [f"scenario={self.config.scenario}", f"trials={self.trials}"]
        for rule, cov in self.coverage.items():
            lines.append(f"coverage.{rule}={_g(cov)}")
            lines.append(f"mcse.{rule}={_g(self.mcse(rule))}")
        for rule, ln in self.avg_length.items():
            lines.append(f"avg_length.{rule}={_g(ln)}")
        for k, ln in enumerate(self.expert_length, 1):
            lines.append(f"expert_length.{k}={_g(ln)}")
        for k, c in enumerate(self.expert_coverage, 1):
            lines.append(f"expert_coverage.{k}={_g(c)}")
        for key, v in self.summary.items():
            lines.append(f"{key}={_g(v) if isinstance(v, float) else v}")
        return lines

    def to_text(self) -> str:
        return self.config.echo() + "".join(line + "\n" for line in self.summary_lines())

    def series_csv(self) -> str:
        """Long format ``series,t,value`` for plotting."""
        rows = ["series,t,value"]
        for name, (ts, vals) in self.series.items():
            rows += [f"{name},{int(t)},{_g(float(v))}" for t, v in zip(ts, vals)]
        return "\n".join(rows) + "\n"


class _Tally:
    """Running hit counts and length sums per rule."""

    def __init__(self):
        self.hits: dict[str, int] = {}
        self.lengths: dict[str, float] = {}

    def add(self, rule: str, s: IntervalSet, y: float):
        self.hits[rule] = self.hits.get(rule, 0) + (y in s)
        self.lengths[rule] = self.lengths.get(rule, 0.0) + (math.inf if s.full else measure(s))


def _vote_replication(tally: _Tally, sets, y_test: float, u: float, sub: dict):
    w = WeightVector.uniform(len(sets))
    cm = majority_vote(sets, w)
    cr = randomized_majority_vote(sets, w, u)
    tally.add("majority", cm, y_test)
    tally.add("randomized", cr, y_test)
    if (y_test in cr) and not (y_test in cm):
        sub["nesting_violations"] += 1
    for k, s in enumerate(sets):
        tally.add(f"expert{k + 1}", s, y_test)


def _report(cfg: SimConfig, tally: _Tally, B: int, sub: dict, K: int) -> SimReport:
    rep = SimReport(cfg, B)
    for rule in ("majority", "randomized"):
        rep.coverage[rule] = tally.hits[rule] / B
        rep.avg_length[rule] = tally.lengths[rule] / B
    rep.expert_length = [tally.lengths[f"expert{k + 1}"] / B for k in range(K)]
    rep.expert_coverage = [tally.hits[f"expert{k + 1}"] / B for k in range(K)]
    rep.summary.update(sub)
    rep.summary["guarantee"] = 1 - cfg.alpha
    return rep


def run_splines_like(cfg: SimConfig) -> SimReport:
    """Smooth 1-d regression, K kernel smoothers over a bandwidth grid.

    Per replication: ``x ~ U(0,1)``, ``y = sin(5x) + N(0, noise_sd^2)``; the
    first half fits, the second half calibrates at miscoverage ``alpha/2``;
    one test point is scored against the majority and randomized votes.
    """
    seed = cfg.require_seed()
    lams = cfg.lam_grid()
    n_train = cfg.n // 2
    tally, sub = _Tally(), {"nesting_violations": 0}
    for b in range(cfg.B):
        rng = substream(seed, b, "splines")
        x = rng.uniform(0, 1, cfg.n + 1)
        y = np.sin(5 * x) + rng.normal(0, cfg.noise_sd, cfg.n + 1)
        u = rng.uniform()
        train = Dataset(x[:n_train], y[:n_train])
        calib = Dataset(x[n_train:cfg.n], y[n_train:cfg.n])
        sets = []
        for lam in lams:
            model = calibrate(KernelSmoother(train.x, train.y, lam), calib, cfg.alpha / 2)
            sets.append(predict_interval(model, x[cfg.n : cfg.n + 1]))
        _vote_replication(tally, sets, float(y[cfg.n]), u, sub)
    return _report(cfg, tally, cfg.B, sub, len(lams))


def highdim_beta(cfg: SimConfig) -> np.ndarray:
    beta = np.zeros(cfg.p)
    beta[: cfg.m_active] = cfg.beta_value
    return beta


def run_highdim(cfg: SimConfig) -> SimReport:
    """Sparse linear model with ``p`` Gaussian covariates; K lasso fits over a penalty grid."""
    seed = cfg.require_seed()
    lams = cfg.lam_grid()
    beta = highdim_beta(cfg)
    n_train = cfg.n // 2
    tally, sub = _Tally(), {"nesting_violations": 0}
    for b in range(cfg.B):
        rng = substream(seed, b, "highdim")
        X = rng.standard_normal((cfg.n + 1, cfg.p))
        y = X @ beta + rng.normal(0, cfg.noise_sd, cfg.n + 1)
        u = rng.uniform()
        calib = Dataset(X[n_train:cfg.n], y[n_train:cfg.n])
        fits = lasso_path(X[:n_train], y[:n_train], lams)
        sets = [predict_interval(calibrate(f, calib, cfg.alpha / 2), X[cfg.n]) for f in fits]
        _vote_replication(tally, sets, float(y[cfg.n]), u, sub)
    return _report(cfg, tally, cfg.B, sub, len(lams))


def independence_closed_form(K: int, alpha: float) -> float:
    return binomial_quantile(K, alpha).coverage


def run_independence_check(cfg: SimConfig) -> SimReport:
    """K independent exact ``1 - alpha`` sets around the target ``y = 0``.

    Set k is ``[-1, 1]`` when its Bernoulli(1 - alpha) draw says "cover",
    otherwise a unit interval away from zero that no other set shares.
    """
    seed = cfg.require_seed()
    K, alpha = cfg.K, cfg.alpha
    hits = 0
    for b in range(cfg.B):
        rng = substream(seed, b, "independence")
        cover = rng.uniform(size=K) < 1 - alpha
        sets = [
            normalize([(-1.0, 1.0)]) if c else normalize([(2.0 + 2 * k, 3.0 + 2 * k)])
            for k, c in enumerate(cover)
        ]
        hits += 0.0 in independent_merge(sets, alpha)
    rep = SimReport(cfg, cfg.B)
    rep.coverage["independent"] = hits / cfg.B
    q = binomial_quantile(K, alpha)
    rep.summary["q"] = q.q
    rep.summary["closed_form"] = q.coverage
    rep.summary["guarantee"] = 1 - alpha
    return rep
