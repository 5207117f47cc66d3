"""Tests for the multi-trial simulator."""

from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Any

import numpy as np
import pytest

from trialcv import (
    ConfigError,
    OutcomeKind,
    SimConfig,
    overlap_census,
    simulate_collection,
    simulate_trial,
)
from trialcv.runner import replicate_seed
from trialcv.simulate import FUTURE_STUDY_ID, feature_names, trial_seed, truth_sidecar


class TestShapes:
    """Layout of generated trials."""

    def test_default_layout(self) -> None:
        collection, future, truth = simulate_collection(SimConfig(n_per_trial=10))
        assert collection.study_ids == ("trial_1", "trial_2", "trial_3", "trial_4")
        assert future.study_id == FUTURE_STUDY_ID
        assert future.features.shape == (10, 330)
        assert all(len(t.correlated_indices) == 15 for t in truth.trials)

    def test_feature_names_never_include_latent(self, small_sim: SimConfig) -> None:
        assert feature_names(small_sim) == (
            "Z1", "Z2", "Z3", "Z4", "Z5", "Z6", "N1", "N2", "N3", "N4",
        )

    def test_expose_latent_appends_x(self, small_sim: SimConfig) -> None:
        config = replace(small_sim, expose_latent=True)
        collection, _, truth = simulate_collection(config)
        study = collection.studies[0]
        assert study.feature_names[-1] == "X"
        np.testing.assert_array_equal(study.features[:, -1], truth.trials[0].latent)

    def test_indices_are_one_based_and_sorted(self, small_sim: SimConfig) -> None:
        _, _, truth = simulate_collection(small_sim)
        for trial in truth.trials:
            assert list(trial.correlated_indices) == sorted(trial.correlated_indices)
            assert all(1 <= j <= small_sim.n_covariates for j in trial.correlated_indices)


class TestDeterminism:
    """Each trial is a pure function of its derived seed."""

    def test_same_seed_same_data(self, small_sim: SimConfig) -> None:
        a, fa, _ = simulate_collection(small_sim)
        b, fb, _ = simulate_collection(small_sim)
        assert all(x.equals(y) for x, y in zip(a, b))
        assert fa.equals(fb)

    def test_different_seed_different_data(self, small_sim: SimConfig) -> None:
        a, _, _ = simulate_collection(small_sim)
        b, _, _ = simulate_collection(replace(small_sim, seed=8))
        assert not a.studies[0].equals(b.studies[0])

    def test_trial_streams_are_independent_of_trial_count(self, small_sim: SimConfig) -> None:
        a, _, _ = simulate_collection(small_sim)
        b, _, _ = simulate_collection(replace(small_sim, n_legacy=6))
        for x, y in zip(a, b):
            assert x.equals(y)

    def test_replicate_seeds_draw_distinct_subsets(self) -> None:
        seen: set[tuple[tuple[int, ...], ...]] = set()
        for replicate in range(50):
            config = SimConfig(n_per_trial=4, n_noise=0, seed=replicate_seed(0, replicate))
            _, _, truth = simulate_collection(config)
            subsets = tuple(t.correlated_indices for t in truth.trials)
            assert len(set(subsets)) == len(subsets)
            seen.add(subsets)
        assert len(seen) == 50

    def test_simulate_trial_matches_collection(self, small_sim: SimConfig) -> None:
        collection, _, _ = simulate_collection(small_sim)
        study, _ = simulate_trial(small_sim, 2, trial_seed(small_sim, 2))
        assert study.equals(collection.studies[2])


class TestDistribution:
    """Correlation structure and outcome model."""

    def test_correlated_covariates_track_latent(self) -> None:
        config = SimConfig(n_per_trial=20_000, n_covariates=5, n_correlated=2, n_noise=1, rho=0.9)
        collection, _, truth = simulate_collection(config)
        study, trial = collection.studies[0], truth.trials[0]
        for j in range(1, 6):
            r = np.corrcoef(study.features[:, j - 1], trial.latent)[0, 1]
            if j in trial.correlated_indices:
                assert 0.88 <= r <= 0.92
            else:
                assert abs(r) < 4 / np.sqrt(config.n_per_trial)

    def test_marginals_are_standard_normal(self) -> None:
        config = SimConfig(n_per_trial=20_000, n_covariates=6, n_correlated=3, n_noise=3, rho=0.7)
        collection, _, _ = simulate_collection(config)
        features = collection.studies[1].features
        bound = 4 / np.sqrt(config.n_per_trial)
        np.testing.assert_array_less(np.abs(features.mean(axis=0)), bound)
        np.testing.assert_array_less(np.abs(features.std(axis=0) - 1.0), 0.03)

    def test_correlated_pairs_share_rho_squared(self) -> None:
        config = SimConfig(n_per_trial=20_000, n_covariates=6, n_correlated=3, n_noise=0, rho=0.9)
        collection, _, truth = simulate_collection(config)
        study, trial = collection.studies[0], truth.trials[0]
        cols = [j - 1 for j in trial.correlated_indices]
        for a, b in itertools.combinations(cols, 2):
            r = np.corrcoef(study.features[:, a], study.features[:, b])[0, 1]
            assert r == pytest.approx(0.81, abs=0.02)

    def test_rho_zero_decorrelates(self) -> None:
        config = SimConfig(
            n_per_trial=20_000, n_covariates=3, n_correlated=3, n_noise=0, rho=0.0
        )
        collection, _, truth = simulate_collection(config)
        for j in range(3):
            r = np.corrcoef(collection.studies[0].features[:, j], truth.trials[0].latent)[0, 1]
            assert abs(r) < 4 / np.sqrt(config.n_per_trial)

    def test_binary_null_effect_has_even_response(self) -> None:
        config = SimConfig(
            n_per_trial=20_000,
            n_covariates=2,
            n_correlated=1,
            n_noise=0,
            beta=0.0,
            outcome_kind=OutcomeKind.BINARY,
        )
        collection, _, _ = simulate_collection(config)
        rate = float(collection.studies[0].outcome.mean())
        assert abs(rate - 0.5) < 3 * 0.5 / np.sqrt(config.n_per_trial)

    def test_continuous_outcome_follows_latent(self) -> None:
        config = SimConfig(n_per_trial=5_000, n_covariates=2, n_correlated=1, n_noise=0, beta=2.0)
        collection, _, truth = simulate_collection(config)
        resid = collection.studies[0].outcome - 2.0 * truth.trials[0].latent
        assert abs(float(resid.std()) - 1.0) < 0.05


class TestCensus:
    """Overlap census of correlated subsets."""

    def test_weighted_census_counts_every_selection(self) -> None:
        _, _, truth = simulate_collection(SimConfig(n_per_trial=5))
        census = overlap_census(truth)
        assert sum(m * count for m, count in census.items()) == 5 * 15

    def test_all_covariates_correlated(self) -> None:
        _, _, truth = simulate_collection(
            SimConfig(n_per_trial=5, n_covariates=30, n_correlated=30, n_noise=0)
        )
        assert overlap_census(truth) == {5: 30}

    def test_sidecar_lists_every_trial(self, small_sim: SimConfig) -> None:
        _, _, truth = simulate_collection(small_sim)
        sidecar = truth_sidecar(truth)
        assert [t["study_id"] for t in sidecar["trials"]][-1] == FUTURE_STUDY_ID
        assert len(sidecar["trials"]) == small_sim.n_trials
        assert sidecar["seed"] == small_sim.seed


class TestValidation:
    """SimConfig.validate."""

    @pytest.mark.parametrize(
        "changes",
        [
            {"n_correlated": 7},
            {"rho": 1.0},
            {"n_per_trial": 1},
            {"n_covariates": 0, "n_correlated": 0, "n_noise": 0},
        ],
    )
    def test_invalid_configs(self, small_sim: SimConfig, changes: dict[str, Any]) -> None:
        with pytest.raises(ConfigError):
            simulate_collection(replace(small_sim, **changes))
