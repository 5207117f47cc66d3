from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from trialcv import OutcomeKind, SimConfig, StudyCollection, TrialDataset

StudyFactory = Callable[..., TrialDataset]


@pytest.fixture
def make_study() -> StudyFactory:
    """Build a small random study; binary studies threshold the first column."""

    def factory(
        study_id: str,
        n: int = 30,
        p: int = 3,
        *,
        seed: int = 0,
        kind: OutcomeKind = OutcomeKind.CONTINUOUS,
    ) -> TrialDataset:
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n, p))
        if kind is OutcomeKind.BINARY:
            y = (X[:, 0] + 0.5 * rng.standard_normal(n) > 0).astype(float)
        else:
            y = X[:, 0] + 0.5 * rng.standard_normal(n)
        return TrialDataset(
            study_id=study_id,
            features=X,
            feature_names=tuple(f"f{j}" for j in range(p)),
            outcome=y,
            outcome_kind=kind,
        )

    return factory


@pytest.fixture
def four_studies(make_study: StudyFactory) -> StudyCollection:
    return StudyCollection(
        tuple(make_study(f"s{i}", n=30, p=4, seed=i) for i in range(4))
    )


@pytest.fixture
def small_sim() -> SimConfig:
    return SimConfig(
        n_per_trial=40,
        n_legacy=4,
        n_covariates=6,
        n_correlated=3,
        n_noise=4,
        seed=7,
    )
