"""L1-penalized linear and logistic regression by coordinate descent.

Features are centred (and by default scaled to unit variance) before
fitting; reported coefficients are on the original scale. The logistic
model is solved by iteratively reweighted least squares with the same
coordinate-descent inner solver.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy.special import expit, logit

from ..errors import DegenerateOutcomeError
from ..models import FloatArray, OutcomeKind
from ..types import Family, ModelSpec
from . import (
    FittedModel,
    Learner,
    Params,
    check_training_data,
    default_feature_names,
)

logger = logging.getLogger("trialcv.learners.lasso")

TOL = 1e-7
MAX_SWEEPS = 10_000
MAX_IRLS = 100
PROB_CLAMP = 1e-5


@dataclass(frozen=True, eq=False)
class LassoModel(FittedModel):
    family: ClassVar[Family] = Family.LASSO

    params: Params
    feature_names: tuple[str, ...]
    kind: OutcomeKind
    intercept: float
    coef: FloatArray
    # Solution of the standardized problem, kept for optimality checks.
    std_intercept: float
    std_coef: FloatArray
    center: FloatArray
    scale: FloatArray
    n_sweeps: int = 0
    converged: bool = True

    @property
    def lam(self) -> float:
        return self.params["lambda"]

    def _predict(self, X: FloatArray) -> FloatArray:
        eta = self.intercept + X @ self.coef
        if self.kind is OutcomeKind.BINARY:
            return np.asarray(expit(eta), dtype=np.float64)
        return np.asarray(eta, dtype=np.float64)


@dataclass
class _Standardized:
    X: FloatArray
    center: FloatArray
    scale: FloatArray

    @classmethod
    def of(cls, X: FloatArray, standardize: bool) -> _Standardized:
        center = X.mean(axis=0)
        if standardize:
            scale = X.std(axis=0)
            scale[scale == 0] = 1.0
        else:
            scale = np.ones(X.shape[1])
        return cls(X=(X - center) / scale, center=center, scale=scale)


class _GramColumns:
    """Lazily computed columns of (1/n)·Xcᵀ W Xc."""

    def __init__(self, Xc: FloatArray, weights: FloatArray | None = None) -> None:
        self._Xc = Xc
        self._n = Xc.shape[0]
        self._wX = Xc if weights is None else Xc * weights[:, None]
        self.diag = np.einsum("ij,ij->j", self._wX, Xc) / self._n
        self._cache: dict[int, FloatArray] = {}

    def column(self, j: int) -> FloatArray:
        col = self._cache.get(j)
        if col is None:
            col = self._Xc.T @ self._wX[:, j] / self._n
            self._cache[j] = col
        return col


def soft_threshold(z: float, lam: float) -> float:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def _coordinate_descent(
    gram: _GramColumns,
    corr: FloatArray,
    lam: float,
    beta: FloatArray,
    tol: float,
    max_sweeps: int,
) -> tuple[FloatArray, int, bool]:
    """Minimize ½βᵀGβ − corrᵀβ + λ‖β‖₁ in place, starting from ``beta``.

    Full sweeps alternate with sweeps over the active set; convergence is
    declared only after a full sweep moves no coefficient by ``tol`` or more.
    """
    diag = gram.diag
    usable = np.flatnonzero(diag > 1e-12)
    grad = corr.copy()
    for j in np.flatnonzero(beta):
        grad -= beta[j] * gram.column(int(j))

    full = True
    active = usable
    for sweep in range(1, max_sweeps + 1):
        coords = usable if full else active
        max_delta = 0.0
        for j in coords:
            j = int(j)
            old = beta[j]
            d_j = diag[j]
            new = soft_threshold(grad[j] + d_j * old, lam) / d_j
            if new != old:
                delta = new - old
                beta[j] = new
                grad -= delta * gram.column(j)
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            if full:
                return beta, sweep, True
            full = True
        else:
            full = False
            active = np.flatnonzero(beta)
            if active.size == 0:
                full = True
    return beta, max_sweeps, False


def lambda_max(X: FloatArray, y: FloatArray, standardize: bool = True) -> float:
    """Smallest λ for which every slope is zero."""
    X, y = check_training_data(X, y)
    std = _Standardized.of(X, standardize)
    return float(np.max(np.abs(std.X.T @ (y - y.mean()))) / X.shape[0])


def lambda_grid(
    X: FloatArray,
    y: FloatArray,
    n_lambdas: int = 50,
    min_ratio: float = 1e-3,
    standardize: bool = True,
) -> tuple[float, ...]:
    """``n_lambdas`` values log-spaced over [λ_max·min_ratio, λ_max], descending."""
    top = lambda_max(X, y, standardize)
    if top <= 0:
        return (0.0,)
    grid = np.geomspace(top, top * min_ratio, num=n_lambdas)
    return tuple(float(v) for v in grid)


def fit_lasso(
    X: FloatArray,
    y: FloatArray,
    lam: float,
    kind: OutcomeKind = OutcomeKind.CONTINUOUS,
    *,
    feature_names: Sequence[str] | None = None,
    standardize: bool = True,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> LassoModel:
    """Fit an L1-penalized model at a single λ."""
    return lasso_path(
        X,
        y,
        [lam],
        kind,
        feature_names=feature_names,
        standardize=standardize,
        tol=tol,
        max_sweeps=max_sweeps,
    )[0]


def lasso_path(
    X: FloatArray,
    y: FloatArray,
    lambdas: Sequence[float],
    kind: OutcomeKind = OutcomeKind.CONTINUOUS,
    *,
    feature_names: Sequence[str] | None = None,
    standardize: bool = True,
    tol: float = TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> list[LassoModel]:
    """Fit every λ, warm-starting from the next larger one.

    Models come back in the order of ``lambdas``.
    """
    X, y = check_training_data(X, y)
    kind = OutcomeKind(kind)
    if any(not lam >= 0 for lam in lambdas):
        raise ValueError("lambda must be >= 0")
    names = tuple(feature_names) if feature_names is not None else default_feature_names(X.shape[1])
    if X.shape[0] < 2:
        raise DegenerateOutcomeError("lasso needs at least 2 observations")
    if kind is OutcomeKind.BINARY:
        ybar = float(y.mean())
        if ybar in (0.0, 1.0):
            raise DegenerateOutcomeError(
                "binary lasso needs both classes in the training outcome"
            )

    std = _Standardized.of(X, standardize)
    gram = _GramColumns(std.X)
    corr = std.X.T @ (y - y.mean()) / X.shape[0]
    order = sorted(range(len(lambdas)), key=lambda i: -lambdas[i])
    fitted: dict[int, LassoModel] = {}
    beta = np.zeros(X.shape[1])
    b0: float | None = None
    for i in order:
        lam = float(lambdas[i])
        if kind is OutcomeKind.BINARY:
            beta, b0, sweeps, ok = _fit_logistic(std.X, y, lam, beta.copy(), b0, tol, max_sweeps)
        else:
            beta, sweeps, ok = _coordinate_descent(gram, corr, lam, beta.copy(), tol, max_sweeps)
            b0 = float(y.mean())
        if not ok:
            logger.warning("lasso did not converge at lambda=%.3g after %d sweeps", lam, sweeps)
        coef = beta / std.scale
        fitted[i] = LassoModel(
            params={"lambda": lam},
            feature_names=names,
            kind=kind,
            intercept=float(b0 - std.center @ coef),
            coef=coef,
            std_intercept=float(b0),
            std_coef=beta.copy(),
            center=std.center,
            scale=std.scale,
            n_sweeps=sweeps,
            converged=ok,
        )
    return [fitted[i] for i in range(len(lambdas))]


def _fit_logistic(
    Xs: FloatArray,
    y: FloatArray,
    lam: float,
    beta: FloatArray,
    b0: float | None,
    tol: float,
    max_sweeps: int,
) -> tuple[FloatArray, float, int, bool]:
    n = Xs.shape[0]
    if b0 is None:
        b0 = float(logit(y.mean()))
    total_sweeps = 0
    for _ in range(MAX_IRLS):
        eta = b0 + Xs @ beta
        prob = np.clip(expit(eta), PROB_CLAMP, 1.0 - PROB_CLAMP)
        w = prob * (1.0 - prob)
        z = eta + (y - prob) / w
        w_sum = float(w.sum())
        x_bar = Xs.T @ w / w_sum
        z_bar = float(w @ z) / w_sum
        Xc = Xs - x_bar
        gram = _GramColumns(Xc, w)
        corr = Xc.T @ (w * (z - z_bar)) / n

        new_beta, sweeps, ok = _coordinate_descent(
            gram, corr, lam, beta.copy(), tol, max_sweeps - total_sweeps
        )
        total_sweeps += sweeps
        new_b0 = z_bar - float(x_bar @ new_beta)
        delta = max(float(np.max(np.abs(new_beta - beta), initial=0.0)), abs(new_b0 - b0))
        beta, b0 = new_beta, new_b0
        if not ok:
            return beta, b0, total_sweeps, False
        if delta < tol:
            return beta, b0, total_sweeps, True
    return beta, b0, total_sweeps, False


class LassoLearner(Learner):
    family: ClassVar[Family] = Family.LASSO

    def candidates(
        self, spec: ModelSpec, X: FloatArray, y: FloatArray, kind: OutcomeKind
    ) -> list[Params]:
        grid = spec.grid
        if grid.lambdas is not None:
            lambdas = grid.lambdas
        else:
            lambdas = lambda_grid(
                X, y, grid.n_lambdas, grid.lambda_min_ratio, spec.standardize
            )
        return [{"lambda": float(lam)} for lam in lambdas]

    def fit(
        self,
        X: FloatArray,
        y: FloatArray,
        params: Params,
        kind: OutcomeKind,
        *,
        spec: ModelSpec,
        feature_names: Sequence[str],
        seed: int,
    ) -> LassoModel:
        return fit_lasso(
            X,
            y,
            params["lambda"],
            kind,
            feature_names=feature_names,
            standardize=spec.standardize,
        )

    def fit_candidates(
        self,
        X: FloatArray,
        y: FloatArray,
        candidates: Sequence[Params],
        kind: OutcomeKind,
        *,
        spec: ModelSpec,
        feature_names: Sequence[str],
        seed: int,
    ) -> list[FittedModel]:
        return list(
            lasso_path(
                X,
                y,
                [c["lambda"] for c in candidates],
                kind,
                feature_names=feature_names,
                standardize=spec.standardize,
            )
        )

    def simplicity(self, params: Params) -> tuple[float, ...]:
        return (-params["lambda"],)
