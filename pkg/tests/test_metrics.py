"""Tests for the evaluation metrics."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from trialcv import (
    DataError,
    auc,
    calibration_threshold,
    classification_accuracy,
    delta_orr,
    generalized_r2,
)
from trialcv.metrics import criterion_value, evaluate
from trialcv.types import Criterion


def _pairwise_auc(scores: np.ndarray, truths: np.ndarray) -> float:
    pos = scores[truths == 1]
    neg = scores[truths == 0]
    total = 0.0
    for a, b in itertools.product(pos, neg):
        total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (pos.size * neg.size)


class TestAuc:
    """Mann-Whitney AUC."""

    def test_worked_example(self) -> None:
        assert auc([0.9, 0.8, 0.3, 0.2], [1, 0, 1, 0]).value == pytest.approx(0.75)

    def test_matches_pairwise_count_with_ties(self) -> None:
        rng = np.random.default_rng(3)
        for _ in range(1000):
            n = int(rng.integers(2, 51))
            scores = np.round(rng.random(n), 1)
            truths = (rng.random(n) < 0.5).astype(float)
            if truths.min() == truths.max():
                continue
            assert auc(scores, truths).value == pytest.approx(
                _pairwise_auc(scores, truths), abs=1e-12
            )

    def test_all_tied_scores_give_half(self) -> None:
        assert auc([0.4, 0.4, 0.4], [1, 0, 1]).value == pytest.approx(0.5)

    def test_monotone_transform_invariance(self) -> None:
        rng = np.random.default_rng(1)
        scores = rng.random(50)
        truths = (rng.random(50) < 0.4).astype(float)
        assert auc(scores, truths).value == pytest.approx(auc(np.exp(3 * scores), truths).value)

    def test_label_flip(self) -> None:
        rng = np.random.default_rng(2)
        scores = rng.random(60)
        truths = (rng.random(60) < 0.5).astype(float)
        a = auc(scores, truths).value
        b = auc(scores, 1 - truths).value
        assert a is not None and b is not None
        assert a + b == pytest.approx(1.0)

    def test_single_class_is_missing(self) -> None:
        value = auc([0.1, 0.7], [1, 1])
        assert value.is_missing
        assert value.missing_reason == "degenerate class"


class TestCalibrationThreshold:
    """Empirical-quantile thresholds."""

    def test_even_sample_median_is_midpoint(self) -> None:
        assert calibration_threshold([0.4, 0.1, 0.3, 0.2]) == pytest.approx(0.25)

    def test_odd_sample_median_is_middle_value(self) -> None:
        assert calibration_threshold([5.0, 1.0, 3.0, 2.0, 4.0]) == 3.0

    def test_half_of_distinct_scores_are_positive(self) -> None:
        scores = np.random.default_rng(0).random(20)
        t = calibration_threshold(scores, 0.5)
        assert int(np.count_nonzero(scores >= t)) == 10

    def test_quarter_prevalence(self) -> None:
        scores = np.arange(8, dtype=float)
        t = calibration_threshold(scores, 0.25)
        assert int(np.count_nonzero(scores >= t)) == 2

    def test_tied_boundary_group_falls_on_nearer_side(self) -> None:
        scores = np.array([0.0, 1.0, 1.0, 1.0])
        t = calibration_threshold(scores, 0.25)
        assert int(np.count_nonzero(scores >= t)) == 0

    def test_tied_boundary_group_kept_on_equal_distance(self) -> None:
        scores = np.array([0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0])
        t = calibration_threshold(scores, 0.375)
        assert int(np.count_nonzero(scores >= t)) == 4

    @pytest.mark.parametrize("target", [0.1, 0.2, 0.3, 0.4, 0.6, 0.75, 0.9])
    def test_tied_scores_get_as_close_as_ties_allow(self, target: float) -> None:
        rng = np.random.default_rng(int(target * 100))
        for _ in range(50):
            scores = rng.integers(0, 4, size=int(rng.integers(2, 30))).astype(float)
            k = int(np.floor(target * scores.size + 0.5))
            t = calibration_threshold(scores, target)
            n_pos = int(np.count_nonzero(scores >= t))
            achievable = [int(np.count_nonzero(scores >= v)) for v in np.unique(scores)]
            achievable.append(0)
            assert abs(n_pos - k) == min(abs(a - k) for a in achievable)

    def test_all_equal_scores_make_everyone_positive(self) -> None:
        scores = [0.3, 0.3, 0.3, 0.3]
        t = calibration_threshold(scores)
        assert all(s >= t for s in scores)

    def test_empty_input_raises(self) -> None:
        with pytest.raises(DataError):
            calibration_threshold([])

    def test_prevalence_out_of_range_raises(self) -> None:
        with pytest.raises(DataError):
            calibration_threshold([0.1, 0.2], 1.0)


class TestDeltaOrr:
    """Response-rate difference between biomarker groups."""

    def test_reference_groups(self) -> None:
        # 500 biomarker-positive with 192 responders, 500 negative with 122.
        scores = np.concatenate([np.ones(500), np.zeros(500)])
        truths = np.zeros(1000)
        truths[:192] = 1
        truths[500:622] = 1
        orr1, orr0, delta = delta_orr(scores, truths, 0.5)
        assert orr1.value == pytest.approx(0.384)
        assert orr0.value == pytest.approx(0.244)
        assert delta.value == pytest.approx(0.140)

    def test_identical_scores_leave_negative_group_empty(self) -> None:
        scores = [0.3, 0.3, 0.3, 0.3]
        t = calibration_threshold(scores)
        orr1, orr0, delta = delta_orr(scores, [1, 0, 1, 0], t)
        assert orr1.value == pytest.approx(0.5)
        assert orr0.missing_reason == "empty biomarker group"
        assert delta.missing_reason == "empty biomarker group"


class TestThresholdedMetricsInvariance:
    """ΔORR and accuracy see only which side of the threshold a score is on."""

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone_maps_on_each_side(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        scores = rng.normal(size=80)
        truths = (rng.random(80) < 0.4).astype(float)
        t = calibration_threshold(scores, 0.3)
        positive = scores >= t
        moved = np.where(
            positive,
            t + np.expm1(scores - t) + 0.5,
            t - 1.0 - np.exp(t - scores),
        )
        assert np.array_equal(moved >= t, positive)
        before = [v.value for v in delta_orr(scores, truths, t)]
        after = [v.value for v in delta_orr(moved, truths, t)]
        assert before == after
        assert (
            classification_accuracy(scores, truths, t).value
            == classification_accuracy(moved, truths, t).value
        )


class TestAccuracy:
    """Thresholded classification accuracy."""

    def test_worked_example(self) -> None:
        value = classification_accuracy([0.9, 0.1, 0.6], [1, 0, 0], 0.5)
        assert value.value == pytest.approx(2 / 3)

    def test_threshold_above_every_score(self) -> None:
        value = classification_accuracy([0.2, 0.3, 0.4, 0.1], [1, 0, 0, 0], 0.9)
        assert value.value == pytest.approx(0.75)


class TestGeneralizedR2:
    """Out-of-sample R²."""

    def test_worse_than_mean_is_negative(self) -> None:
        assert generalized_r2([2.0, 1.0, 0.0], [0.0, 1.0, 2.0]).value == pytest.approx(-3.0)

    def test_perfect_prediction(self) -> None:
        assert generalized_r2([1.0, 2.0, 4.0], [1.0, 2.0, 4.0]).value == pytest.approx(1.0)

    def test_predicting_the_mean_is_zero(self) -> None:
        assert generalized_r2([2.0, 2.0, 2.0], [1.0, 2.0, 3.0]).value == pytest.approx(0.0)

    def test_constant_truth_is_missing(self) -> None:
        assert generalized_r2([1.0, 2.0], [3.0, 3.0]).missing_reason == "zero total variance"

    def test_single_sample_is_missing(self) -> None:
        assert generalized_r2([1.0], [3.0]).is_missing


class TestEvaluate:
    """Report assembly."""

    def test_report_follows_requested_order(self) -> None:
        report = evaluate([0.9, 0.1, 0.6, 0.2], [1, 0, 1, 0], ("accuracy", "auc"), 0.5)
        assert report.names() == ("accuracy", "auc")
        assert report.value("auc") == pytest.approx(1.0)

    def test_classification_metrics_need_threshold(self) -> None:
        with pytest.raises(ValueError):
            evaluate([0.9, 0.1], [1, 0], ("orr1",))

    def test_missing_value_raises_on_access(self) -> None:
        report = evaluate([0.1, 0.2], [1, 1], ("auc",))
        with pytest.raises(KeyError):
            report.value("auc")


class TestCriterion:
    """Inner-loop tuning criteria."""

    def test_mse(self) -> None:
        assert criterion_value(Criterion.MSE, [1.0, 2.0], [1.0, 4.0]) == pytest.approx(2.0)

    def test_auc_undefined_on_single_class(self) -> None:
        assert criterion_value(Criterion.AUC, [0.1, 0.2], [0, 0]) is None

    def test_only_mse_is_minimized(self) -> None:
        assert not Criterion.MSE.maximize
        assert Criterion.AUC.maximize and Criterion.R2.maximize
