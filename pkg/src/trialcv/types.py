"""Configuration types for trialcv."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Literal, TypedDict

from .errors import ConfigError
from .models import OutcomeKind


class Family(str, Enum):
    """Learner families."""

    LASSO = "lasso"
    RANDOM_FOREST = "random_forest"
    GBM = "gbm"


class Criterion(str, Enum):
    """Inner-loop tuning criteria."""

    AUC = "auc"
    MSE = "mse"
    R2 = "r2"

    @property
    def maximize(self) -> bool:
        return self is not Criterion.MSE


METRIC_NAMES: tuple[str, ...] = ("auc", "orr1", "orr0", "delta_orr", "accuracy", "gen_r2")
BINARY_METRICS: tuple[str, ...] = ("auc", "orr1", "orr0", "delta_orr", "accuracy")
CONTINUOUS_METRICS: tuple[str, ...] = ("gen_r2",)

SCHEME_NAMES: tuple[str, ...] = ("kfold", "loso")
TRUTH = "truth"

SweepAxis = Literal["rho", "beta", "n_correlated", "n_per_trial"]
SWEEP_AXES: tuple[str, ...] = ("rho", "beta", "n_correlated", "n_per_trial")
DEFAULT_SWEEPS: dict[str, tuple[float, ...]] = {
    "rho": (0.1, 0.3, 0.5, 0.7, 0.9),
    "beta": (0.25, 0.5, 1.0, 2.0),
    "n_correlated": (5, 10, 15, 20, 25, 30),
    "n_per_trial": (100, 200, 300, 500),
}

Mode = Literal["sim", "sweep", "external"]


def metrics_for(kind: OutcomeKind) -> tuple[str, ...]:
    return BINARY_METRICS if kind is OutcomeKind.BINARY else CONTINUOUS_METRICS


@dataclass(frozen=True)
class SimConfig:
    """Parameters of the multi-trial simulator."""

    n_per_trial: int = 500
    n_legacy: int = 4
    beta: float = 1.0
    rho: float = 0.9
    n_covariates: int = 30
    n_correlated: int = 15
    n_noise: int = 300
    noise_sd: float = 1.0
    outcome_kind: OutcomeKind = OutcomeKind.CONTINUOUS
    seed: int = 0
    # Appends the latent causal feature as a final column named "X".
    expose_latent: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcome_kind", OutcomeKind(self.outcome_kind))

    def validate(self) -> None:
        if self.n_per_trial < 2:
            raise ConfigError(f"n_per_trial must be >= 2, got {self.n_per_trial}")
        if self.n_legacy < 1:
            raise ConfigError(f"n_legacy must be >= 1, got {self.n_legacy}")
        if not abs(self.rho) < 1:
            raise ConfigError(f"|rho| must be < 1, got {self.rho}")
        if self.n_covariates < 0 or self.n_noise < 0:
            raise ConfigError("n_covariates and n_noise must be non-negative")
        if not 0 <= self.n_correlated <= self.n_covariates:
            raise ConfigError(
                f"n_correlated must lie in [0, n_covariates={self.n_covariates}], "
                f"got {self.n_correlated}"
            )
        if self.n_covariates + self.n_noise + int(self.expose_latent) < 1:
            raise ConfigError("simulation needs at least one feature")
        if not self.noise_sd >= 0:
            raise ConfigError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def n_trials(self) -> int:
        return self.n_legacy + 1


@dataclass(frozen=True)
class CalibrationPolicy:
    """How classification thresholds are chosen."""

    mode: Literal["calibrated", "uncalibrated"] = "calibrated"
    target_prevalence: float = 0.5
    fixed_threshold: float = 0.5

    @classmethod
    def calibrated(cls, target_prevalence: float = 0.5) -> CalibrationPolicy:
        return cls(mode="calibrated", target_prevalence=target_prevalence)

    @classmethod
    def uncalibrated(cls, fixed_threshold: float = 0.5) -> CalibrationPolicy:
        return cls(mode="uncalibrated", fixed_threshold=fixed_threshold)

    @property
    def is_calibrated(self) -> bool:
        return self.mode == "calibrated"

    def validate(self) -> None:
        if self.mode not in ("calibrated", "uncalibrated"):
            raise ConfigError(f"Unknown calibration mode: {self.mode!r}")
        if not 0 < self.target_prevalence < 1:
            raise ConfigError(
                f"target_prevalence must lie in (0, 1), got {self.target_prevalence}"
            )
        if not abs(self.fixed_threshold) < float("inf"):
            raise ConfigError("fixed_threshold must be finite")


@dataclass(frozen=True)
class CvScheme:
    """K-fold over pooled samples, or leave-one-study-out."""

    kind: Literal["kfold", "loso"]
    k: int = 4
    seed: int = 0

    @classmethod
    def kfold(cls, k: int = 4, seed: int = 0) -> CvScheme:
        return cls(kind="kfold", k=k, seed=seed)

    @classmethod
    def loso(cls) -> CvScheme:
        return cls(kind="loso")

    @property
    def name(self) -> str:
        return self.kind


@dataclass(frozen=True)
class HyperGrid:
    """Candidate hyperparameters for every family.

    ``lambdas=None`` means 50 log-spaced values resolved against the training
    data at tune time; ``mtry=None`` means {⌈√p⌉, ⌈p/3⌉, ⌈p/10⌉}.
    """

    lambdas: tuple[float, ...] | None = None
    n_lambdas: int = 50
    lambda_min_ratio: float = 1e-3
    mtry: tuple[int, ...] | None = None
    min_node: tuple[int, ...] = (1, 5, 10)
    n_trees: tuple[int, ...] = (50, 100, 200, 500, 1000)
    shrinkage: tuple[float, ...] = (0.01, 0.1)

    def validate(self, family: Family) -> None:
        if family is Family.LASSO:
            if self.lambdas is not None:
                if not self.lambdas:
                    raise ConfigError("lasso grid: lambdas must be non-empty")
                if any(not lam >= 0 for lam in self.lambdas):
                    raise ConfigError("lasso grid: lambdas must be >= 0")
            if self.n_lambdas < 1 or not 0 < self.lambda_min_ratio <= 1:
                raise ConfigError("lasso grid: need n_lambdas >= 1 and 0 < ratio <= 1")
        elif family is Family.RANDOM_FOREST:
            if self.mtry is not None and (not self.mtry or min(self.mtry) < 1):
                raise ConfigError("random_forest grid: mtry values must be >= 1")
            if not self.min_node or min(self.min_node) < 1:
                raise ConfigError("random_forest grid: min_node values must be >= 1")
        elif family is Family.GBM:
            if not self.n_trees or min(self.n_trees) < 0:
                raise ConfigError("gbm grid: n_trees values must be >= 0")
            if not self.shrinkage or any(not 0 < v <= 1 for v in self.shrinkage):
                raise ConfigError("gbm grid: shrinkage values must lie in (0, 1]")


@dataclass(frozen=True)
class ModelSpec:
    """A learner family with its hyperparameter grid."""

    family: Family
    grid: HyperGrid = field(default_factory=HyperGrid)
    forest_trees: int = 500
    standardize: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))

    def validate(self) -> None:
        self.grid.validate(self.family)
        if self.forest_trees < 1:
            raise ConfigError(f"forest_trees must be >= 1, got {self.forest_trees}")


# =============================================================================
# Experiment configuration
# =============================================================================


class SimConfigDict(TypedDict, total=False):
    n_per_trial: int
    n_legacy: int
    beta: float
    rho: float
    n_covariates: int
    n_correlated: int
    n_noise: int
    noise_sd: float
    outcome_kind: str
    seed: int
    expose_latent: bool


class CalibrationDict(TypedDict, total=False):
    mode: str
    target_prevalence: float
    fixed_threshold: float


class HyperGridDict(TypedDict, total=False):
    lambdas: list[float]
    n_lambdas: int
    lambda_min_ratio: float
    mtry: list[int]
    min_node: list[int]
    n_trees: list[int]
    shrinkage: list[float]


class ExperimentConfigDict(TypedDict, total=False):
    mode: str
    sim: SimConfigDict
    replicates: int
    schemes: list[str]
    models: list[str]
    metrics: list[str]
    calibration: CalibrationDict
    sweep_axis: str
    sweep_values: list[float]
    external_path: str
    future: str
    output_dir: str
    master_seed: int
    jobs: int
    profile: str
    k_folds: int
    forest_trees: int
    lasso_standardize: bool
    grids: dict[str, HyperGridDict]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one `trialcv` run needs."""

    mode: Mode = "sim"
    sim: SimConfig = field(default_factory=SimConfig)
    replicates: int = 100
    schemes: tuple[str, ...] = SCHEME_NAMES
    models: tuple[Family, ...] = (Family.LASSO,)
    # None selects every metric applicable to the outcome kind.
    metrics: tuple[str, ...] | None = None
    calibration: CalibrationPolicy = field(default_factory=CalibrationPolicy)
    sweep_axis: SweepAxis | None = None
    sweep_values: tuple[float, ...] = ()
    external_path: str | None = None
    future: str | None = None
    output_dir: str = "results"
    master_seed: int = 0
    jobs: int = 1
    profile: Literal["full", "fast"] = "full"
    k_folds: int = 4
    forest_trees: int = 500
    lasso_standardize: bool = True
    grids: dict[Family, HyperGrid] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "models", tuple(Family(m) for m in self.models))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if self.metrics is not None:
            object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))

    def resolved_metrics(self, kind: OutcomeKind | None = None) -> tuple[str, ...]:
        kind = kind or self.sim.outcome_kind
        if self.metrics is None:
            return metrics_for(kind)
        return tuple(m for m in METRIC_NAMES if m in self.metrics)

    def resolved_sweep_values(self) -> tuple[float, ...]:
        if self.sweep_values or self.sweep_axis is None:
            return self.sweep_values
        return DEFAULT_SWEEPS[self.sweep_axis]

    def model_spec(self, family: Family, kind: OutcomeKind | None = None) -> ModelSpec:
        from .learners import default_grid

        kind = kind or self.sim.outcome_kind
        grid = self.grids.get(family) or default_grid(family, kind)
        return ModelSpec(
            family=family,
            grid=grid,
            forest_trees=self.forest_trees,
            standardize=self.lasso_standardize,
        )

    def validate(self, kind: OutcomeKind | None = None) -> None:
        if self.mode not in ("sim", "sweep", "external"):
            raise ConfigError(f"Unknown mode: {self.mode!r}")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if not self.schemes or any(s not in SCHEME_NAMES for s in self.schemes):
            raise ConfigError(f"schemes must be a non-empty subset of {SCHEME_NAMES}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ConfigError("schemes must not repeat")
        if not self.models or len(set(self.models)) != len(self.models):
            raise ConfigError("models must be a non-empty set")
        if self.k_folds < 2:
            raise ConfigError(f"k_folds must be >= 2, got {self.k_folds}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        self.sim.validate()
        self.calibration.validate()

        kind = kind or self.sim.outcome_kind
        metrics = self.metrics if self.metrics is not None else metrics_for(kind)
        if not metrics:
            raise ConfigError("metrics must be non-empty")
        unknown = [m for m in metrics if m not in METRIC_NAMES]
        if unknown:
            raise ConfigError(f"Unknown metrics: {', '.join(unknown)}")
        allowed = metrics_for(kind)
        wrong = [m for m in metrics if m not in allowed]
        if wrong:
            raise ConfigError(
                f"Metrics {', '.join(wrong)} do not apply to {kind.value} outcomes"
            )

        for family in self.models:
            self.model_spec(family, kind).validate()

        if self.mode == "sweep":
            self._validate_sweep()
        if self.mode == "external":
            if not self.external_path:
                raise ConfigError("external mode requires external_path")
            if not self.future:
                raise ConfigError("external mode requires a future study id (--future)")

    def _validate_sweep(self) -> None:
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}")
        values = self.resolved_sweep_values()
        if not values:
            raise ConfigError("sweep_values must be non-empty")
        for value in values:
            self.sim_at(value).validate()

    def sim_at(self, value: float) -> SimConfig:
        """SimConfig with the sweep axis set to ``value``."""
        if self.sweep_axis in ("n_correlated", "n_per_trial"):
            if float(value) != int(value):
                raise ConfigError(f"{self.sweep_axis} sweep values must be integers")
            return replace(self.sim, **{self.sweep_axis: int(value)})
        if self.sweep_axis in ("rho", "beta"):
            return replace(self.sim, **{self.sweep_axis: float(value)})
        raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}")
