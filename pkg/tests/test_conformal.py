import math

import numpy as np
import pytest
from sklearn.linear_model import Lasso

from coma.conformal import (
    Dataset,
    KernelSmoother,
    LinearPredictor,
    PredictorSpec,
    calibrate,
    conformal_rank,
    fit_predictor,
    interval,
    lasso_path,
    predict_interval,
    split_conformal,
)
from coma.errors import DataError
from coma.intervals import FULL_LINE, IntervalSet
from coma.sims import substream


def line_data(n=50):
    x = np.linspace(-2, 2, n)
    return Dataset(x, 2 * x)


class TestFit:
    def test_least_squares_exact_line(self):
        f = fit_predictor(PredictorSpec("least-squares"), line_data())
        assert f.coef[0] == pytest.approx(2, abs=1e-8)
        assert f.intercept == pytest.approx(0, abs=1e-8)

    def test_ridge_shrinks(self):
        d = line_data()
        a = fit_predictor(PredictorSpec("ridge", 0.0), d).coef[0]
        b = fit_predictor(PredictorSpec("ridge", 100.0), d).coef[0]
        assert 0 < b < a

    def test_lasso_large_penalty_is_intercept_only(self, rng):
        X = rng.standard_normal((40, 5))
        y = X @ np.arange(1, 6) + 3 + rng.standard_normal(40)
        f = fit_predictor(PredictorSpec("lasso", 1e6), Dataset(X, y))
        assert np.all(f.coef == 0)
        assert f.intercept == pytest.approx(y.mean())

    def test_lasso_zero_penalty_matches_least_squares(self, rng):
        X = rng.standard_normal((80, 6))
        y = X @ rng.standard_normal(6) + rng.standard_normal(80)
        a = fit_predictor(PredictorSpec("lasso", 0.0), Dataset(X, y))
        b = fit_predictor(PredictorSpec("least-squares"), Dataset(X, y))
        np.testing.assert_allclose(a.coef, b.coef, atol=1e-5)

    def test_lasso_matches_sklearn(self, rng):
        X = rng.standard_normal((50, 120))
        beta = np.zeros(120)
        beta[:10] = 1.0
        y = X @ beta + rng.standard_normal(50)
        lams = [0.05, 0.2, 1.0]
        fits = lasso_path(X, y, lams)
        for lam, f in zip(lams, fits):
            ref = Lasso(alpha=lam, tol=1e-12, max_iter=200_000).fit(X, y)
            np.testing.assert_allclose(f.coef, ref.coef_, atol=2e-4)
            assert f.intercept == pytest.approx(ref.intercept_, abs=2e-4)

    def test_lasso_path_order_irrelevant(self, rng):
        X = rng.standard_normal((30, 8))
        y = X[:, 0] + rng.standard_normal(30)
        a = lasso_path(X, y, [0.1, 0.5])
        b = lasso_path(X, y, [0.5, 0.1])
        np.testing.assert_allclose(a[0].coef, b[1].coef, atol=1e-9)

    def test_kernel_smoother_limits(self):
        x = np.array([0.0, 1.0, 2.0])
        y = np.array([1.0, 5.0, 3.0])
        narrow = KernelSmoother(x[:, None], y, 1e-3)
        np.testing.assert_allclose(narrow(x), y)
        wide = KernelSmoother(x[:, None], y, 1e4)
        np.testing.assert_allclose(wide(np.array([7.0])), [3.0], rtol=1e-6)

    def test_kernel_far_point_is_finite(self):
        f = KernelSmoother(np.array([[0.0], [1.0]]), np.array([0.0, 2.0]), 0.01)
        assert f(np.array([50.0]))[0] == pytest.approx(2.0)

    def test_singular_design(self):
        X = np.ones((10, 2))
        f = fit_predictor(PredictorSpec("least-squares"), Dataset(X, np.arange(10.0)))
        assert np.all(np.isfinite(f.coef))

    @pytest.mark.parametrize("spec", [("kernel-smoother", 0.0), ("nope", 1.0), ("ridge", -1.0)])
    def test_bad_spec(self, spec):
        with pytest.raises(DataError):
            PredictorSpec(*spec)

    def test_bad_dataset(self):
        with pytest.raises(DataError):
            Dataset(np.ones((3, 1)), np.ones(4))
        with pytest.raises(DataError):
            Dataset(np.array([1.0, math.nan]), np.ones(2))


class TestCalibration:
    def test_rank_formula(self):
        assert conformal_rank(9, 0.1) == 9
        assert conformal_rank(1, 0.05) == 2
        assert conformal_rank(249, 0.05) == 238

    def test_max_score_when_rank_is_n(self):
        f = LinearPredictor(0.0, np.array([0.0]))
        cal = Dataset(np.zeros(9), np.arange(1.0, 10.0))
        assert calibrate(f, cal, 0.1).radius == 9.0

    def test_infinite_flag(self):
        f = LinearPredictor(0.0, np.array([0.0]))
        m = calibrate(f, Dataset(np.zeros(1), np.ones(1)), 0.05)
        assert m.infinite and predict_interval(m, [0.0]) == FULL_LINE

    def test_constant_scores(self):
        f = LinearPredictor(0.0, np.array([0.0]))
        cal = Dataset(np.zeros(20), np.full(20, -1.5))
        for level in (0.1, 0.3, 0.6):
            assert calibrate(f, cal, level).radius == 1.5

    def test_interval_arithmetic(self):
        assert interval(1.0, 0.5) == IntervalSet.of((0.5, 1.5))
        assert interval(1.0, 0.0) == IntervalSet.point(1.0)
        assert interval(1.0, None) == FULL_LINE
        assert interval(1.0, -1.0).is_empty

    def test_radius_at_levels(self, rng):
        f = LinearPredictor(0.0, np.array([0.0]))
        m = calibrate(f, Dataset(np.zeros(99), rng.standard_normal(99)), 0.1)
        radii = [m.radius_at(a) for a in np.linspace(0.01, 0.99, 50)]
        assert all(r is not None for r in radii)
        assert all(b <= a for a, b in zip(radii, radii[1:]))
        assert m.radius_at(0.0) is None and m.radius_at(-0.2) is None
        assert m.radius_at(1.0) < 0 and m.radius_at(1.7) < 0

    def test_deterministic(self, rng):
        X = rng.standard_normal((60, 3))
        y = X[:, 0] + rng.standard_normal(60)
        d = Dataset(X, y)
        tr, ca = d.split(30)
        a = split_conformal(PredictorSpec("lasso", 0.1), tr, ca, 0.1)
        b = split_conformal(PredictorSpec("lasso", 0.1), tr, ca, 0.1)
        assert a.radius == b.radius and np.array_equal(a.predictor.coef, b.predictor.coef)

    @pytest.mark.parametrize("family,lam", [("least-squares", 0), ("ridge", 1.0), ("lasso", 0.05), ("kernel-smoother", 0.3)])
    def test_marginal_coverage(self, family, lam):
        level, B, hits = 0.1, 600, 0
        for b in range(B):
            r = substream(5, b, "coverage")
            x = r.uniform(-1, 1, (41, 2))
            y = np.sin(3 * x[:, 0]) + x[:, 1] + r.standard_normal(41) * 0.3
            d = Dataset(x[:40], y[:40])
            tr, ca = d.split(20)
            m = split_conformal(PredictorSpec(family, lam), tr, ca, level)
            hits += float(y[40]) in predict_interval(m, x[40])
        p = hits / B
        assert p >= 1 - level - 3 * math.sqrt(level * (1 - level) / B)
