"""Tests for stump gradient boosting."""

from __future__ import annotations

import numpy as np
import pytest

from trialcv import DegenerateOutcomeError, LearnerError, OutcomeKind, fit_gbm
from trialcv.learners import get_learner
from trialcv.learners.boosting import MIN_LEAF
from trialcv.types import Family, HyperGrid, ModelSpec


def _data(seed: int, n: int = 60, p: int = 3) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    y = np.where(X[:, 0] > 0.3, 2.0, -1.0) + 0.5 * X[:, 1] + 0.3 * rng.standard_normal(n)
    return X, y


class TestContinuous:
    """Squared-error boosting."""

    def test_zero_trees_predicts_mean(self) -> None:
        X, y = _data(0)
        model = fit_gbm(X, y, 0, 0.1)
        np.testing.assert_allclose(model.predict(X, model.feature_names), y.mean())

    def test_single_full_step_stump_matches_brute_force(self) -> None:
        rng = np.random.default_rng(1)
        x = rng.permutation(40).astype(float)
        y = np.where(x >= 25, 3.0, 0.0) + rng.standard_normal(40)
        model = fit_gbm(x.reshape(-1, 1), y, 1, 1.0)

        order = np.argsort(x)
        xs, ys = x[order], y[order]
        best_sse, best_split = np.inf, 0
        for i in range(MIN_LEAF, 40 - MIN_LEAF + 1):
            left, right = ys[:i], ys[i:]
            sse = float(((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum())
            if sse < best_sse:
                best_sse, best_split = sse, i
        threshold = (xs[best_split - 1] + xs[best_split]) / 2
        expected = np.where(x <= threshold, ys[:best_split].mean(), ys[best_split:].mean())

        assert model.split_threshold[0] == pytest.approx(threshold)
        np.testing.assert_allclose(model.predict(x.reshape(-1, 1), model.feature_names), expected, atol=1e-9)

    def test_training_error_never_increases(self) -> None:
        X, y = _data(2)
        model = fit_gbm(X, y, 60, 0.1)
        errors = [
            float(np.mean((y - model.truncated(k).predict(X, model.feature_names)) ** 2))
            for k in range(61)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))

    def test_truncation_equals_shorter_fit(self) -> None:
        X, y = _data(3)
        long = fit_gbm(X, y, 50, 0.1)
        short = fit_gbm(X, y, 30, 0.1)
        np.testing.assert_array_equal(
            long.truncated(30).predict(X, long.feature_names),
            short.predict(X, short.feature_names),
        )

    def test_raw_score_is_base_plus_shrunken_sum(self) -> None:
        X, y = _data(4)
        model = fit_gbm(X, y, 5, 0.2)
        total = np.zeros(X.shape[0])
        for t in range(model.n_stumps):
            left = X[:, model.split_feature[t]] <= model.split_threshold[t]
            total += np.where(left, model.left_value[t], model.right_value[t])
        np.testing.assert_allclose(model.raw_score(X), model.base + 0.2 * total)

    def test_constant_feature_stops_early(self) -> None:
        X = np.ones((30, 2))
        y = np.arange(30.0)
        model = fit_gbm(X, y, 10, 0.1)
        assert model.n_stumps == 0
        np.testing.assert_allclose(model.predict(X, model.feature_names), y.mean())


class TestBinary:
    """Bernoulli deviance boosting."""

    def test_zero_trees_predicts_prevalence(self) -> None:
        X, y = _data(5)
        yb = (y > 0).astype(float)
        model = fit_gbm(X, yb, 0, 0.1, OutcomeKind.BINARY)
        np.testing.assert_allclose(model.predict(X, model.feature_names), yb.mean())

    def test_scores_are_probabilities(self) -> None:
        X, y = _data(6)
        yb = (y > 0).astype(float)
        model = fit_gbm(X, yb, 40, 0.1, OutcomeKind.BINARY)
        scores = model.predict(X, model.feature_names)
        assert np.all((scores > 0) & (scores < 1))
        assert scores[yb == 1].mean() > scores[yb == 0].mean()

    def test_single_class_raises(self) -> None:
        X, _ = _data(7)
        with pytest.raises(DegenerateOutcomeError):
            fit_gbm(X, np.zeros(X.shape[0]), 5, 0.1, OutcomeKind.BINARY)


class TestValidation:
    """Parameter checks."""

    def test_too_few_observations(self) -> None:
        X, y = _data(8, n=19)
        with pytest.raises(DegenerateOutcomeError, match="10 per terminal node"):
            fit_gbm(X, y, 5, 0.1)

    @pytest.mark.parametrize(("n_trees", "shrinkage"), [(-1, 0.1), (5, 0.0), (5, 1.5)])
    def test_invalid_parameters(self, n_trees: int, shrinkage: float) -> None:
        X, y = _data(9)
        with pytest.raises(LearnerError):
            fit_gbm(X, y, n_trees, shrinkage)


class TestLearner:
    """Grid handling."""

    def test_fit_candidates_matches_separate_fits(self) -> None:
        X, y = _data(10)
        learner = get_learner(Family.GBM)
        spec = ModelSpec(Family.GBM, HyperGrid(n_trees=(5, 20), shrinkage=(0.01, 0.1)))
        names = ("a", "b", "c")
        params = learner.candidates(spec, X, y, OutcomeKind.CONTINUOUS)
        models = learner.fit_candidates(
            X, y, params, OutcomeKind.CONTINUOUS, spec=spec, feature_names=names, seed=0
        )
        for p, model in zip(params, models):
            single = fit_gbm(X, y, int(p["n_trees"]), p["shrinkage"], feature_names=names)
            np.testing.assert_array_equal(model.predict(X, names), single.predict(X, names))

    def test_simplest_is_fewest_trees_then_smallest_shrinkage(self) -> None:
        learner = get_learner(Family.GBM)
        params = [
            {"n_trees": 50, "shrinkage": 0.01},
            {"n_trees": 5, "shrinkage": 0.1},
            {"n_trees": 5, "shrinkage": 0.01},
        ]
        assert min(params, key=learner.simplicity) == {"n_trees": 5, "shrinkage": 0.01}
