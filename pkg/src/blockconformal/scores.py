"""Residual-based conformity scores and their evaluation over permutation sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import DimensionError, GridPointError, NumericalError, ValidationError
from .estimators import (
    FitConfig,
    LassoDesign,
    LinearFit,
    Method,
    RidgeDesign,
    fit_ar_responses,
    lag_matrix,
)
from .permutations import PermutationSet
from .series import AugmentedSeries, ObservedSeries, apply_permutation, augment


class ScoreKind(str, Enum):
    REGRESSION_RESIDUAL = "REGRESSION_RESIDUAL"
    AR_RESIDUAL = "AR_RESIDUAL"
    ORACLE_RESIDUAL = "ORACLE_RESIDUAL"


# estimators whose fit does not depend on row order
_ORDER_FREE = {Method.LASSO, Method.RIDGE, Method.OLS}


@dataclass(frozen=True, eq=False)
class ConformityScorer:
    """The l_p norm of the last ``T1`` residuals of a fitted (or oracle) model.

    ``training_size``, when set, fits the estimator on the first
    ``training_size`` points only; paired with a split permutation set that
    fixes those points this is inductive conformal prediction.
    """

    kind: ScoreKind = ScoreKind.REGRESSION_RESIDUAL
    estimator: Method = Method.LASSO
    norm_power: float = 1.0
    estimator_config: FitConfig = field(default_factory=FitConfig)
    oracle_beta: np.ndarray | None = None
    training_size: int | None = None

    def __post_init__(self):
        kind = ScoreKind(self.kind)
        object.__setattr__(self, "kind", kind)
        estimator = Method(self.estimator)
        if kind == ScoreKind.AR_RESIDUAL:
            estimator = Method.AR_OLS
        elif estimator == Method.AR_OLS:
            raise ValidationError("AR_OLS estimator requires kind AR_RESIDUAL")
        object.__setattr__(self, "estimator", estimator)
        if not self.norm_power >= 1:
            raise ValidationError(f"norm_power must be >= 1, got {self.norm_power}")
        if kind == ScoreKind.ORACLE_RESIDUAL:
            if self.oracle_beta is None:
                raise ValidationError("oracle scorer needs oracle_beta")
            beta = np.array(self.oracle_beta, dtype=float).reshape(-1)
            beta.flags.writeable = False
            object.__setattr__(self, "oracle_beta", beta)
        if self.training_size is not None and self.training_size < 1:
            raise ValidationError("training_size must be positive")

    @classmethod
    def lasso(cls, penalty_weight: float | None = None, norm_power: float = 1.0, **kw) -> ConformityScorer:
        return cls(ScoreKind.REGRESSION_RESIDUAL, Method.LASSO, norm_power, FitConfig(penalty_weight=penalty_weight), **kw)

    @classmethod
    def ridge(cls, penalty_weight: float, norm_power: float = 1.0, **kw) -> ConformityScorer:
        return cls(ScoreKind.REGRESSION_RESIDUAL, Method.RIDGE, norm_power, FitConfig(penalty_weight=penalty_weight), **kw)

    @classmethod
    def ols(cls, norm_power: float = 1.0, **kw) -> ConformityScorer:
        return cls(ScoreKind.REGRESSION_RESIDUAL, Method.OLS, norm_power, **kw)

    @classmethod
    def ar(cls, lag_order: int, norm_power: float = 1.0, **kw) -> ConformityScorer:
        return cls(ScoreKind.AR_RESIDUAL, Method.AR_OLS, norm_power, FitConfig(lag_order=lag_order), **kw)

    @classmethod
    def oracle(cls, beta, norm_power: float = 1.0) -> ConformityScorer:
        return cls(ScoreKind.ORACLE_RESIDUAL, Method.OLS, norm_power, oracle_beta=beta)

    @property
    def order_free(self) -> bool:
        return self.kind == ScoreKind.ORACLE_RESIDUAL or self.estimator in _ORDER_FREE


def lp_norm(values: np.ndarray, power: float) -> np.ndarray:
    """l_p norm along the last axis."""
    a = np.abs(values)
    if power == 1:
        return a.sum(axis=-1)
    if power == 2:
        return np.sqrt((a * a).sum(axis=-1))
    return (a**power).sum(axis=-1) ** (1.0 / power)


# ------------------------------------------------------------------ #
# Fitting on raw arrays
# ------------------------------------------------------------------ #


def _fitter(scorer: ConformityScorer, features: np.ndarray) -> Callable[[np.ndarray], LinearFit]:
    """A function fitting the scorer's estimator to responses paired with ``features``."""
    cfg = scorer.estimator_config
    if scorer.estimator == Method.LASSO:
        design = LassoDesign(features, cfg.fit_intercept)
        return lambda y: design.fit(y, cfg)
    if scorer.estimator in (Method.RIDGE, Method.OLS):
        lam = 0.0 if scorer.estimator == Method.OLS else cfg.penalty_weight
        if lam is None:
            raise ValidationError("ridge regression needs an explicit penalty_weight")
        design = RidgeDesign(features, lam, cfg.fit_intercept)
        return design.fit
    return lambda y: fit_ar_responses(y, cfg)


def _residuals_from_fit(fit: LinearFit, y: np.ndarray, X: np.ndarray) -> np.ndarray:
    if fit.method == Method.AR_OLS:
        return y[fit.order :] - lag_matrix(y, fit.order) @ fit.coefficients
    return y - fit.predict(X)


class _ResidualEngine:
    """Residuals of the scorer's model for series sharing one feature matrix."""

    def __init__(self, scorer: ConformityScorer, features: np.ndarray, T0: int):
        self.scorer = scorer
        self.X = features
        T, p = features.shape
        self.T, self.T0 = T, T0
        m = scorer.training_size
        if m is not None and m > T:
            raise DimensionError(f"training_size {m} exceeds T={T}")
        self.m = T if m is None else m
        if scorer.kind == ScoreKind.ORACLE_RESIDUAL:
            if scorer.oracle_beta.shape[0] != p:
                raise DimensionError(f"oracle_beta has length {scorer.oracle_beta.shape[0]}, p={p}")
            self._fit = None
        else:
            self._fit = _fitter(scorer, features[: self.m])
        self._cached_fit = None

    def fit(self, y: np.ndarray) -> LinearFit | None:
        if self._fit is None:
            return None
        # the training window excludes every hypothesized value: fit once
        if self.m <= self.T0 and self.scorer.estimator != Method.AR_OLS:
            if self._cached_fit is None:
                self._cached_fit = self._fit(y[: self.m])
            return self._cached_fit
        return self._fit(y[: self.m])

    def residuals(self, y: np.ndarray, X: np.ndarray | None = None) -> np.ndarray:
        """Residual vector aligned so its last ``T1`` entries belong to the tail."""
        X = self.X if X is None else X
        with np.errstate(over="ignore", invalid="ignore"):
            if self.scorer.kind == ScoreKind.ORACLE_RESIDUAL:
                r = y - X @ self.scorer.oracle_beta
            else:
                r = _residuals_from_fit(self.fit(y), y, X)
        if r.shape[0] < self.T - self.T0:
            raise DimensionError("fewer residuals than tail points")
        if not np.all(np.isfinite(r)):
            raise NumericalError("non-finite residuals")
        return r


def _tail_score(r: np.ndarray, T1: int, power: float) -> float:
    return float(lp_norm(r[-T1:], power))


def score(scorer: ConformityScorer, z: AugmentedSeries) -> float:
    """Conformity score of ``z``: the l_p norm of its last ``T1`` fitted residuals."""
    engine = _ResidualEngine(scorer, z.features, z.T0)
    return _tail_score(engine.residuals(z.responses), z.T1, scorer.norm_power)


def fast_path_eligible(scorer: ConformityScorer, pis: PermutationSet) -> bool:
    """Whether ``S(Z^pi)`` can be read off one fit by permuting residuals.

    True for order-free estimators, or for any estimator trained on a prefix
    that every permutation leaves fixed.  AR fits are never eligible because
    lags are rebuilt on the permuted series.
    """
    if scorer.kind == ScoreKind.ORACLE_RESIDUAL:
        return True
    if scorer.estimator == Method.AR_OLS:
        return False
    if scorer.training_size is None:
        return scorer.order_free
    m = scorer.training_size
    return bool(np.all(pis.table[:, :m] == np.arange(m)))


def _check_sizes(z: AugmentedSeries, pis: PermutationSet) -> None:
    if pis.T != z.T:
        raise DimensionError(f"permutation set has T={pis.T}, series has T={z.T}")


def score_over_set(
    scorer: ConformityScorer,
    z: AugmentedSeries,
    pis: PermutationSet,
    *,
    fast: bool | None = None,
) -> np.ndarray:
    """``(S(Z^pi))`` for every ``pi`` in ``pis``, in element order.

    ``fast=None`` uses the residual-permutation shortcut whenever it is valid;
    ``fast=False`` forces one refit per permutation.
    """
    _check_sizes(z, pis)
    use_fast = fast_path_eligible(scorer, pis) if fast is None else fast
    if use_fast and not fast_path_eligible(scorer, pis):
        raise ValidationError("fast path requested for a scorer that is not permutation invariant")
    if use_fast:
        engine = _ResidualEngine(scorer, z.features, z.T0)
        r = engine.residuals(z.responses)
        return lp_norm(r[pis.table[:, z.T0 :]], scorer.norm_power)
    return np.array([score(scorer, apply_permutation(z, pi)) for pi in pis])


def score_grid(
    scorer: ConformityScorer,
    series: ObservedSeries,
    candidates: np.ndarray,
    pis: PermutationSet,
) -> np.ndarray:
    """Score matrix of shape ``(H, n)``: row ``h`` is ``score_over_set`` at candidate ``h``.

    Features are shared by every candidate, so designs and factorizations are
    built once.
    """
    cand = np.asarray(candidates, dtype=float).reshape(len(candidates), -1)
    if pis.T != series.T:
        raise DimensionError(f"permutation set has T={pis.T}, series has T={series.T}")
    if cand.shape[1] != series.T1:
        raise DimensionError(f"candidates have {cand.shape[1]} columns, T1={series.T1}")
    out = np.empty((cand.shape[0], pis.n))
    if not fast_path_eligible(scorer, pis):
        for h, y in enumerate(cand):
            try:
                out[h] = score_over_set(scorer, augment(series, y), pis, fast=False)
            except Exception as e:
                raise GridPointError(h, e) from e
        return out
    engine = _ResidualEngine(scorer, series.features, series.T0)
    tail_idx = pis.table[:, series.T0 :]
    y = np.concatenate([series.responses, np.zeros(series.T1)])
    for h, c in enumerate(cand):
        try:
            if not np.all(np.isfinite(c)):
                raise ValidationError("candidate values must be finite")
            y[series.T0 :] = c
            r = engine.residuals(y)
            out[h] = lp_norm(r[tail_idx], scorer.norm_power)
        except Exception as e:
            raise GridPointError(h, e) from e
    return out


def training_prediction(scorer: ConformityScorer, series: ObservedSeries) -> tuple[np.ndarray, np.ndarray]:
    """Fit on the ``T0`` observed points; return (prediction for the future rows, training residuals).

    For AR scorers the prediction is the one-step forecast of ``Y_{T0+1}``.
    """
    y, X = series.responses, series.features[: series.T0]
    if scorer.kind == ScoreKind.ORACLE_RESIDUAL:
        beta = scorer.oracle_beta
        return series.features[series.T0 :] @ beta, y - X @ beta
    fit = _fitter(scorer, X)(y)
    res = _residuals_from_fit(fit, y, X)
    if fit.method == Method.AR_OLS:
        K = fit.order
        if series.T1 != 1:
            raise ValidationError("AR point prediction is only defined for T1 = 1")
        pred = np.array([y[::-1][:K] @ fit.coefficients])
        return pred, res
    return fit.predict(series.features[series.T0 :]), res
