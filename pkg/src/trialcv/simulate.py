"""Heterogeneous multi-trial simulator.

Each trial draws a latent causal feature X ~ N(0, 1) and an outcome driven
by it. Of the candidate covariates, a per-trial random subset correlates
with X at strength rho (Z = rho*X + sqrt(1 - rho^2)*W); the rest, and all
noise features, are independent standard normals. X itself is never a
feature unless ``SimConfig.expose_latent`` is set.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import expit

from .models import FloatArray, OutcomeKind, StudyCollection, TrialDataset
from .seeds import derive_seed
from .types import SimConfig

logger = logging.getLogger("trialcv.simulate")

FUTURE_STUDY_ID = "future"


@dataclass(frozen=True, eq=False)
class TrialTruth:
    """Generating state of one trial; never shown to learners."""

    study_id: str
    trial_index: int
    seed: int
    latent: FloatArray
    # 1-based covariate numbers, ascending.
    correlated_indices: tuple[int, ...]
    response_prob: FloatArray | None = None


@dataclass(frozen=True)
class SimTruth:
    trials: tuple[TrialTruth, ...]
    seed: int

    @property
    def legacy(self) -> tuple[TrialTruth, ...]:
        return self.trials[:-1]

    @property
    def future(self) -> TrialTruth:
        return self.trials[-1]


def feature_names(config: SimConfig) -> tuple[str, ...]:
    names = [f"Z{j}" for j in range(1, config.n_covariates + 1)]
    names.extend(f"N{j}" for j in range(1, config.n_noise + 1))
    if config.expose_latent:
        names.append("X")
    return tuple(names)


def study_id_for(config: SimConfig, trial_index: int) -> str:
    if trial_index == config.n_legacy:
        return FUTURE_STUDY_ID
    return f"trial_{trial_index + 1}"


def trial_seed(config: SimConfig, trial_index: int) -> int:
    return derive_seed(config.seed, "trial", trial_index)


def simulate_trial(
    config: SimConfig, trial_index: int, stream_seed: int
) -> tuple[TrialDataset, TrialTruth]:
    """Generate one trial from its own random stream."""
    config.validate()
    rng = np.random.default_rng(stream_seed)
    n = config.n_per_trial

    latent = rng.standard_normal(n)
    eps = rng.standard_normal(n) * config.noise_sd
    chosen = np.sort(
        rng.choice(config.n_covariates, size=config.n_correlated, replace=False)
    )
    covariates = rng.standard_normal((n, config.n_covariates))
    if chosen.size:
        covariates[:, chosen] = (
            config.rho * latent[:, None]
            + math.sqrt(1.0 - config.rho**2) * covariates[:, chosen]
        )
    noise = rng.standard_normal((n, config.n_noise))

    prob: FloatArray | None = None
    if config.outcome_kind is OutcomeKind.BINARY:
        prob = expit(config.beta * latent)
        outcome = (rng.random(n) < prob).astype(np.float64)
    else:
        outcome = config.beta * latent + eps

    blocks = [covariates, noise]
    if config.expose_latent:
        blocks.append(latent[:, None])
    study_id = study_id_for(config, trial_index)
    dataset = TrialDataset(
        study_id=study_id,
        features=np.hstack(blocks),
        feature_names=feature_names(config),
        outcome=outcome,
        outcome_kind=config.outcome_kind,
    )
    truth = TrialTruth(
        study_id=study_id,
        trial_index=trial_index,
        seed=stream_seed,
        latent=latent,
        correlated_indices=tuple(int(j) + 1 for j in chosen),
        response_prob=prob,
    )
    return dataset, truth


def simulate_collection(
    config: SimConfig,
) -> tuple[StudyCollection, TrialDataset, SimTruth]:
    """Legacy trials plus one future trial, each from a derived stream."""
    config.validate()
    datasets: list[TrialDataset] = []
    truths: list[TrialTruth] = []
    for index in range(config.n_trials):
        dataset, truth = simulate_trial(config, index, trial_seed(config, index))
        datasets.append(dataset)
        truths.append(truth)
    logger.debug(
        "Simulated %d legacy + 1 future trial (n=%d, p=%d, seed=%d)",
        config.n_legacy,
        config.n_per_trial,
        datasets[0].p,
        config.seed,
    )
    return (
        StudyCollection(tuple(datasets[:-1])),
        datasets[-1],
        SimTruth(trials=tuple(truths), seed=config.seed),
    )


def overlap_census(truth: SimTruth) -> dict[int, int]:
    """Map m → number of covariates correlated with X in exactly m trials."""
    per_covariate = Counter(j for trial in truth.trials for j in trial.correlated_indices)
    census = Counter(per_covariate.values())
    return {m: census[m] for m in sorted(census, reverse=True)}


def truth_sidecar(truth: SimTruth) -> dict[str, Any]:
    """JSON-serializable description of the correlated subsets and seeds."""
    return {
        "trials": [
            {
                "study_id": t.study_id,
                "correlated_indices": list(t.correlated_indices),
                "seed": t.seed,
            }
            for t in truth.trials
        ],
        "seed": truth.seed,
    }
