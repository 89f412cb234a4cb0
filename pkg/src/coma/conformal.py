"""Split conformal intervals over a few native point predictors.

Predictor families (hyperparameter ``lam``):

* ``least-squares``: normal equations with a 1e-10 ridge jitter; ``lam`` ignored.
* ``ridge``: penalty ``lam * ||b||^2`` on centered data, intercept unpenalized.
* ``lasso``: ``(1/2n)||y - b0 - Xb||^2 + lam ||b||_1`` by cyclic coordinate descent.
* ``kernel-smoother``: Nadaraya-Watson with a Gaussian kernel of bandwidth ``lam``.

Scores are absolute residuals; the radius is the
``ceil((n_cal + 1)(1 - level))``-th smallest calibration score.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import DataError
from .intervals import EMPTY, FULL_LINE, IntervalSet, normalize

log = logging.getLogger(__name__)

FAMILIES = ("kernel-smoother", "ridge", "lasso", "least-squares")
JITTER = 1e-10


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise DataError(f"x has shape {x.shape} but y has {y.shape[0]} rows")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise DataError("dataset needs at least one row and one column")
        if np.isnan(x).any() or np.isnan(y).any():
            raise DataError("dataset contains NaN")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.y.shape[0]

    def split(self, n_first: int) -> tuple[Dataset, Dataset]:
        return (
            Dataset(self.x[:n_first], self.y[:n_first]),
            Dataset(self.x[n_first:], self.y[n_first:]),
        )


@dataclass(frozen=True)
class PredictorSpec:
    family: str
    lam: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataError(f"unknown predictor family {self.family!r}")
        if self.lam < 0 or math.isnan(self.lam):
            raise DataError("hyperparameter must be nonnegative")
        if self.family == "kernel-smoother" and not self.lam > 0:
            raise DataError("kernel-smoother bandwidth must be positive")


@dataclass(frozen=True)
class LinearPredictor:
    intercept: float
    coef: np.ndarray

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :] if x.shape[0] == self.coef.shape[0] else x[:, None]
        return self.intercept + x @ self.coef


@dataclass(frozen=True)
class KernelSmoother:
    x: np.ndarray
    y: np.ndarray
    bandwidth: float

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :] if x.shape[0] == self.x.shape[1] else x[:, None]
        d2 = ((x[:, None, :] - self.x[None, :, :]) ** 2).sum(axis=2)
        return nadaraya_watson(d2, self.y, self.bandwidth)


def nadaraya_watson(d2: np.ndarray, y: np.ndarray, bandwidth: float) -> np.ndarray:
    """Gaussian-kernel weighted means given squared distances ``d2`` (m x n)."""
    logk = -0.5 * d2 / bandwidth**2
    logk -= logk.max(axis=1, keepdims=True)  # nearest point keeps weight 1
    k = np.exp(logk)
    return (k @ y) / k.sum(axis=1)


def _least_squares(x, y, ridge: float) -> LinearPredictor:
    xm, ym = x.mean(axis=0), y.mean()
    xc, yc = x - xm, y - ym
    gram = xc.T @ xc
    pen = ridge + JITTER
    try:
        coef = np.linalg.solve(gram + pen * np.eye(gram.shape[0]), xc.T @ yc)
    except np.linalg.LinAlgError:
        log.warning("singular design; falling back to least-squares pseudo-solve")
        coef = np.linalg.lstsq(gram + pen * np.eye(gram.shape[0]), xc.T @ yc, rcond=None)[0]
    return LinearPredictor(float(ym - xm @ coef), coef)


@njit(cache=True)
def _cd_path(xc, yc, lams, tol, max_sweeps):
    """Covariance-update coordinate descent along ``lams`` (given in descending order)."""
    n, p = xc.shape
    gram = xc.T @ xc / n
    corr = xc.T @ yc / n
    yy = (yc @ yc) / n
    b = np.zeros(p)
    gb = np.zeros(p)  # gram @ b, kept current
    out = np.zeros((lams.shape[0], p))
    converged = np.zeros(lams.shape[0], dtype=np.bool_)
    for li in range(lams.shape[0]):
        lam = lams[li]
        for _ in range(max_sweeps):
            max_step = 0.0
            for j in range(p):
                d = gram[j, j]
                if d <= 0.0:
                    continue
                rho = corr[j] - gb[j] + d * b[j]
                if rho > lam:
                    new = (rho - lam) / d
                elif rho < -lam:
                    new = (rho + lam) / d
                else:
                    new = 0.0
                step = new - b[j]
                if step != 0.0:
                    b[j] = new
                    for i in range(p):
                        gb[i] += step * gram[i, j]
                    max_step = max(max_step, abs(step))
            # duality gap with the residual rescaled into the dual feasible set
            r = yc - xc @ b
            zmax = np.max(np.abs(xc.T @ r))
            scale = 1.0
            if zmax > 0.0:
                scale = min(1.0, n * lam / zmax)
            nu = scale * r
            primal = (r @ r) / (2 * n) + lam * np.sum(np.abs(b))
            dual = ((yc @ yc) - ((yc - nu) @ (yc - nu))) / (2 * n)
            if primal - dual <= tol * yy or max_step <= tol * 1e-5:
                converged[li] = True
                break
        out[li] = b
    return out, converged


def lasso_path(
    x: np.ndarray,
    y: np.ndarray,
    lams: Sequence[float],
    tol: float = 1e-7,
    max_sweeps: int = 10_000,
) -> list[LinearPredictor]:
    """Lasso fits along ``lams``, warm-starting from the largest penalty down.

    A fit stops once its duality gap is below ``tol * ||y - ybar||^2 / n``
    (or a full sweep stalls), with at most ``max_sweeps`` sweeps.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = x.mean(axis=0), y.mean()
    lams = np.asarray(lams, dtype=float)
    order = np.argsort(-lams, kind="stable")
    coefs, ok = _cd_path(x - xm, y - ym, lams[order], tol, max_sweeps)
    fits: list[LinearPredictor | None] = [None] * len(lams)
    for row, idx in enumerate(order):
        if not ok[row]:
            log.warning("lasso hit %d sweeps at lam=%g without converging", max_sweeps, lams[idx])
        b = coefs[row].copy()
        fits[idx] = LinearPredictor(float(ym - xm @ b), b)
    return fits  # type: ignore[return-value]


def fit_predictor(spec: PredictorSpec, train: Dataset):
    """Fit ``spec`` on ``train``; returns a callable ``x -> predictions``."""
    x, y = train.x, train.y
    if spec.family == "least-squares":
        return _least_squares(x, y, 0.0)
    if spec.family == "ridge":
        return _least_squares(x, y, spec.lam)
    if spec.family == "lasso":
        return lasso_path(x, y, [spec.lam])[0]
    return KernelSmoother(x, y, spec.lam)


def conformal_rank(n_cal: int, level: float) -> int:
    """1-based order-statistic index ``ceil((n_cal + 1)(1 - level))``."""
    # round away float fuzz such as 10 * 0.9 = 9.000000000000002
    return math.ceil(round((n_cal + 1) * (1.0 - level), 9))


@dataclass(frozen=True)
class SplitConformalModel:
    """Fitted predictor plus sorted calibration scores.

    ``radius`` is the calibrated radius at ``level``; ``infinite`` flags the
    case where the order-statistic index exceeds the calibration size.
    Intervals at other levels (for online level updates) come from
    :meth:`radius_at`.
    """

    predictor: object
    scores: np.ndarray = field(repr=False)
    level: float
    radius: float
    infinite: bool

    def radius_at(self, level: float) -> float | None:
        """Radius at another miscoverage level; ``None`` means the full line.

        Levels at or below 0 give the full line; levels at or above 1 give
        a negative radius, i.e. the empty set.
        """
        if level <= 0:
            return None
        if level >= 1:
            return -1.0
        k = conformal_rank(len(self.scores), level)
        if k > len(self.scores):
            return None
        if k < 1:
            return -1.0
        return float(self.scores[k - 1])

    def predict(self, x) -> np.ndarray:
        return np.asarray(self.predictor(x), dtype=float)


def split_conformal(
    spec: PredictorSpec, train: Dataset, calib: Dataset, level: float
) -> SplitConformalModel:
    if len(calib) < 1:
        raise DataError("calibration set is empty")
    predictor = fit_predictor(spec, train)
    return calibrate(predictor, calib, level)


def calibrate(predictor, calib: Dataset, level: float) -> SplitConformalModel:
    """Wrap an already fitted predictor with calibration scores from ``calib``."""
    scores = np.sort(np.abs(calib.y - np.asarray(predictor(calib.x), dtype=float)))
    k = conformal_rank(len(scores), level)
    if k > len(scores):
        return SplitConformalModel(predictor, scores, level, math.inf, True)
    return SplitConformalModel(predictor, scores, level, float(scores[max(k, 1) - 1]), False)


def interval(center: float, radius: float | None) -> IntervalSet:
    """``[center - radius, center + radius]``; ``None`` is the full line, negative is empty."""
    if radius is None:
        return FULL_LINE
    if radius < 0:
        return EMPTY
    return normalize([(center - radius, center + radius)])


def predict_interval(m: SplitConformalModel, x, level: float | None = None) -> IntervalSet:
    """Interval at a single point ``x``, at the model's level unless ``level`` is given."""
    center = float(m.predict(np.atleast_1d(np.asarray(x, dtype=float)))[0])
    if level is None:
        return interval(center, None if m.infinite else m.radius)
    return interval(center, m.radius_at(level))
