"""JSON experiment configuration: schema validation and dataclass conversion."""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import replace
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .models import OutcomeKind
from .types import (
    METRIC_NAMES,
    SCHEME_NAMES,
    SWEEP_AXES,
    CalibrationPolicy,
    ExperimentConfig,
    Family,
    HyperGrid,
    SimConfig,
)

FAST_PROFILE = {"n_per_trial": 300, "forest_trees": 100, "replicates": 30}

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}}
_INT_LIST = {"type": "array", "items": {"type": "integer"}}

CONFIG_SCHEMA: dict[str, Any] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": ["sim", "sweep", "external"]},
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_per_trial": {"type": "integer", "minimum": 2},
                "n_legacy": {"type": "integer", "minimum": 1},
                "beta": {"type": "number"},
                "rho": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
                "n_covariates": {"type": "integer", "minimum": 0},
                "n_correlated": {"type": "integer", "minimum": 0},
                "n_noise": {"type": "integer", "minimum": 0},
                "noise_sd": {"type": "number", "minimum": 0},
                "outcome_kind": {"enum": [k.value for k in OutcomeKind]},
                "seed": {"type": "integer", "minimum": 0},
                "expose_latent": {"type": "boolean"},
            },
        },
        "replicates": {"type": "integer", "minimum": 1},
        "schemes": {"type": "array", "items": {"enum": list(SCHEME_NAMES)}, "minItems": 1},
        "models": {"type": "array", "items": {"enum": [f.value for f in Family]}, "minItems": 1},
        "metrics": {"type": "array", "items": {"enum": list(METRIC_NAMES)}, "minItems": 1},
        "calibration": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["calibrated", "uncalibrated"]},
                "target_prevalence": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "fixed_threshold": {"type": "number"},
            },
        },
        "sweep_axis": {"enum": list(SWEEP_AXES)},
        "sweep_values": {**_NUMBER_LIST, "minItems": 1},
        "external_path": {"type": "string"},
        "future": {"type": "string"},
        "output_dir": {"type": "string"},
        "master_seed": {"type": "integer", "minimum": 0},
        "jobs": {"type": "integer", "minimum": 1},
        "profile": {"enum": ["full", "fast"]},
        "k_folds": {"type": "integer", "minimum": 2},
        "forest_trees": {"type": "integer", "minimum": 1},
        "lasso_standardize": {"type": "boolean"},
        "grids": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                family.value: {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "lambdas": _NUMBER_LIST,
                        "n_lambdas": {"type": "integer", "minimum": 1},
                        "lambda_min_ratio": {"type": "number"},
                        "mtry": _INT_LIST,
                        "min_node": _INT_LIST,
                        "n_trees": _INT_LIST,
                        "shrinkage": _NUMBER_LIST,
                    },
                }
                for family in Family
            },
        },
    },
}


def validate_document(doc: Mapping[str, Any]) -> None:
    """Check ``doc`` against :data:`CONFIG_SCHEMA` when jsonschema is installed."""
    try:  # Optional dependency
        from jsonschema import Draft7Validator
        from jsonschema.exceptions import best_match
    except ImportError:  # pragma: no cover - optional dependency
        return
    error = best_match(Draft7Validator(CONFIG_SCHEMA).iter_errors(dict(doc)))
    if error is None:
        return
    where = ".".join(str(p) for p in error.absolute_path) or "<root>"
    raise ConfigError(f"Config schema validation failed at {where}: {error.message}")


def _fields(doc: Mapping[str, Any], allowed: set[str], where: str) -> dict[str, Any]:
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"Unknown {where} field(s): {', '.join(unknown)}")
    return dict(doc)


def _grid_from_dict(doc: Mapping[str, Any]) -> HyperGrid:
    fields = _fields(doc, set(HyperGrid.__dataclass_fields__), "grid")
    for key in ("lambdas", "mtry", "min_node", "n_trees", "shrinkage"):
        if key in fields and fields[key] is not None:
            fields[key] = tuple(fields[key])
    return HyperGrid(**fields)


def config_from_dict(doc: Mapping[str, Any], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Overlay the fields present in ``doc`` onto ``base`` (defaults if None)."""
    base = base or ExperimentConfig()
    fields = _fields(doc, set(ExperimentConfig.__dataclass_fields__), "config")
    try:
        if "sim" in fields:
            sim_fields = _fields(fields["sim"], set(SimConfig.__dataclass_fields__), "sim")
            fields["sim"] = replace(base.sim, **sim_fields)
        if "calibration" in fields:
            cal_fields = _fields(
                fields["calibration"], set(CalibrationPolicy.__dataclass_fields__), "calibration"
            )
            fields["calibration"] = replace(base.calibration, **cal_fields)
        if "grids" in fields:
            grids = dict(base.grids)
            for name, grid in fields["grids"].items():
                grids[Family(name)] = _grid_from_dict(grid)
            fields["grids"] = grids
        for key in ("schemes", "models", "metrics", "sweep_values"):
            if key in fields and fields[key] is not None:
                fields[key] = tuple(fields[key])
        return replace(base, **fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid config value: {exc}") from exc


def apply_fast_profile(config: ExperimentConfig) -> ExperimentConfig:
    """Desk-scale settings: smaller trials, fewer trees and replicates."""
    return replace(
        config,
        profile="fast",
        sim=replace(config.sim, n_per_trial=FAST_PROFILE["n_per_trial"]),
        forest_trees=FAST_PROFILE["forest_trees"],
        replicates=FAST_PROFILE["replicates"],
    )


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read a JSON config file and overlay it onto ``base``."""
    config_path = Path(path)
    try:
        doc = json.loads(config_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"Cannot read config {config_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config {config_path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"Config {config_path} must hold a JSON object")
    validate_document(doc)
    return config_from_dict(doc, base)
