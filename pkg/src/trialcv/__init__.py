"""trialcv: K-fold vs leave-one-study-out cross-validation across clinical trials."""

from __future__ import annotations

import logging

from .config import load_config
from .cv import (
    CvResult,
    FoldResult,
    TruthResult,
    evaluate_truth,
    make_folds,
    run_cv,
    tune,
)
from .data import (
    load_study_csv,
    pool_with_labels,
    regroup,
    validate_collection,
    write_study_csv,
)
from .errors import (
    CollectionError,
    ColumnMismatchError,
    ConfigError,
    DataError,
    DataParseError,
    DegenerateOutcomeError,
    ExperimentError,
    FoldError,
    LearnerError,
    TrialCVError,
    UnknownStudyError,
)
from .learners import FittedModel, default_grid, get_learner, predict
from .learners.boosting import fit_gbm
from .learners.forest import fit_random_forest
from .learners.lasso import fit_lasso
from .metrics import (
    auc,
    calibration_threshold,
    classification_accuracy,
    delta_orr,
    generalized_r2,
)
from .models import (
    FoldPlan,
    MetricReport,
    MetricValue,
    OutcomeKind,
    PredictionRecord,
    StudyCollection,
    TrialDataset,
)
from .plots import emit_svg_boxplot, emit_svg_linechart
from .results import ResultRow, ResultTable, emit_csv, read_results_csv, summarize
from .runner import run_external, run_replicated_sim, run_sweep
from .simulate import SimTruth, overlap_census, simulate_collection, simulate_trial
from .types import (
    CalibrationPolicy,
    CvScheme,
    ExperimentConfig,
    Family,
    HyperGrid,
    ModelSpec,
    SimConfig,
)

logging.getLogger("trialcv").addHandler(logging.NullHandler())

__all__ = [
    # Data
    "TrialDataset",
    "StudyCollection",
    "OutcomeKind",
    "FoldPlan",
    "PredictionRecord",
    "validate_collection",
    "pool_with_labels",
    "regroup",
    "load_study_csv",
    "write_study_csv",
    # Simulation
    "SimConfig",
    "SimTruth",
    "simulate_trial",
    "simulate_collection",
    "overlap_census",
    # Learners
    "Family",
    "HyperGrid",
    "ModelSpec",
    "FittedModel",
    "fit_lasso",
    "fit_random_forest",
    "fit_gbm",
    "predict",
    "default_grid",
    "get_learner",
    # Cross-validation
    "CvScheme",
    "CvResult",
    "FoldResult",
    "TruthResult",
    "make_folds",
    "tune",
    "run_cv",
    "evaluate_truth",
    # Metrics
    "CalibrationPolicy",
    "MetricReport",
    "MetricValue",
    "auc",
    "calibration_threshold",
    "delta_orr",
    "classification_accuracy",
    "generalized_r2",
    # Experiments
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "load_config",
    "run_replicated_sim",
    "run_sweep",
    "run_external",
    "emit_csv",
    "read_results_csv",
    "summarize",
    "emit_svg_boxplot",
    "emit_svg_linechart",
    # Errors
    "TrialCVError",
    "ConfigError",
    "DataError",
    "DataParseError",
    "CollectionError",
    "FoldError",
    "UnknownStudyError",
    "LearnerError",
    "DegenerateOutcomeError",
    "ColumnMismatchError",
    "ExperimentError",
]
