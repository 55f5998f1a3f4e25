"""Permutation-invariant learners behind the residual scores.

All regression losses are ``(1/T) * sum_t (Y_t - X_t' beta)^2`` plus a
penalty, so they do not depend on the order of the rows.  The AR fit is the
exception: lags are rebuilt from whatever order the series is in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numba
import numpy as np
from scipy import linalg

from .errors import DimensionError, NumericalError, ValidationError
from .series import AugmentedSeries

# condition number above which an unpenalized normal-equation system is
# treated as singular
_COND_LIMIT = 1e12


class Method(str, Enum):
    RIDGE = "RIDGE"
    LASSO = "LASSO"
    OLS = "OLS"
    AR_OLS = "AR_OLS"


@dataclass(frozen=True)
class FitConfig:
    """Estimator settings.

    ``penalty_weight=None`` selects the LASSO plug-in rule; ridge needs an
    explicit value.  ``lag_order`` is only read by the AR fit.
    """

    penalty_weight: float | None = None
    tolerance: float = 1e-7
    max_iterations: int = 10_000
    lag_order: int = 1
    fit_intercept: bool = False

    def __post_init__(self):
        if self.penalty_weight is not None and not self.penalty_weight >= 0:
            raise ValidationError("penalty_weight must be non-negative")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be positive")
        if self.lag_order < 1:
            raise ValidationError("lag_order must be positive")


@dataclass(frozen=True, eq=False)
class LinearFit:
    coefficients: np.ndarray
    method: Method
    intercept: float | None = None
    converged: bool = True
    iterations: int = 0
    penalty_weight: float | None = None
    objective_trace: np.ndarray | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return self.coefficients.shape[0]

    def predict(self, features: np.ndarray) -> np.ndarray:
        out = np.asarray(features, dtype=float) @ self.coefficients
        if self.intercept is not None:
            out = out + self.intercept
        return out


def _check_finite(z: AugmentedSeries) -> None:
    if not (np.all(np.isfinite(z.responses)) and np.all(np.isfinite(z.features))):
        raise ValidationError("series contains non-finite values")


# ------------------------------------------------------------------ #
# Ridge / OLS
# ------------------------------------------------------------------ #


class RidgeDesign:
    """Factorizes ``X'X/T + lam*I`` once so many response vectors can be fit."""

    def __init__(self, features: np.ndarray, penalty_weight: float, fit_intercept: bool = False):
        X = np.asarray(features, dtype=float)
        T, p = X.shape
        self.fit_intercept = fit_intercept
        self.means = X.mean(axis=0) if fit_intercept else np.zeros(p)
        self.X = X - self.means if fit_intercept else X
        self.T = T
        self.penalty_weight = float(penalty_weight)
        A = self.X.T @ self.X / T + self.penalty_weight * np.eye(p)
        if p and self.penalty_weight == 0 and np.linalg.cond(A) > _COND_LIMIT:
            raise NumericalError("normal equations are singular (collinear design, no penalty)")
        try:
            self._factor = linalg.cho_factor(A) if p else None
        except linalg.LinAlgError as e:
            raise NumericalError(f"normal equations are singular: {e}") from None

    def fit(self, responses: np.ndarray) -> LinearFit:
        y = np.asarray(responses, dtype=float)
        ybar = y.mean() if self.fit_intercept else 0.0
        rhs = self.X.T @ (y - ybar) / self.T
        beta = linalg.cho_solve(self._factor, rhs) if self._factor is not None else rhs
        intercept = float(ybar - self.means @ beta) if self.fit_intercept else None
        method = Method.OLS if self.penalty_weight == 0 else Method.RIDGE
        return LinearFit(beta, method, intercept, penalty_weight=self.penalty_weight)


def fit_ridge(z: AugmentedSeries, cfg: FitConfig) -> LinearFit:
    """Minimize ``(1/T)||Y - X beta||^2 + lam ||beta||_2^2`` via the normal equations."""
    _check_finite(z)
    if cfg.penalty_weight is None:
        raise ValidationError("ridge regression needs an explicit penalty_weight")
    return RidgeDesign(z.features, cfg.penalty_weight, cfg.fit_intercept).fit(z.responses)


def fit_ols(z: AugmentedSeries, cfg: FitConfig | None = None) -> LinearFit:
    _check_finite(z)
    fit_intercept = cfg.fit_intercept if cfg is not None else False
    return RidgeDesign(z.features, 0.0, fit_intercept).fit(z.responses)


# ------------------------------------------------------------------ #
# LASSO by cyclic coordinate descent
# ------------------------------------------------------------------ #


@numba.njit(cache=True)
def _coordinate_descent(gram, corr, yy, lam, tol, max_iter, gamma, trace):
    """Cyclic CD on ``yy - 2 corr'g + g'G g + lam |g|_1``; updates ``gamma`` in place.

    ``q = corr - G gamma`` is kept current so each coordinate step is O(p).
    ``trace``, when non-empty, receives the objective before the first sweep
    and after every sweep.
    """
    p = gram.shape[0]
    q = corr.copy()
    for j in range(p):
        if gamma[j] != 0.0:
            for k in range(p):
                q[k] -= gram[k, j] * gamma[j]
    half = 0.5 * lam
    record = trace.shape[0] > 0
    if record:
        s = 0.0
        for k in range(p):
            s += gamma[k] * (corr[k] + q[k]) - lam * abs(gamma[k])
        trace[0] = yy - s
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        max_delta = 0.0
        for j in range(p):
            gjj = gram[j, j]
            if gjj <= 0.0:
                continue
            old = gamma[j]
            zj = q[j] + gjj * old
            if zj > half:
                new = (zj - half) / gjj
            elif zj < -half:
                new = (zj + half) / gjj
            else:
                new = 0.0
            d = new - old
            if d != 0.0:
                gamma[j] = new
                for k in range(p):
                    q[k] -= gram[k, j] * d
                if abs(d) > max_delta:
                    max_delta = abs(d)
        if record:
            s = 0.0
            for k in range(p):
                s += gamma[k] * (corr[k] + q[k]) - lam * abs(gamma[k])
            trace[it] = yy - s
        if max_delta < tol:
            converged = True
            break
    return it, converged


def plugin_penalty(sigma: float, p: int, T: int) -> float:
    """``1.1 * sigma * sqrt(2 log(p T) / T)``."""
    return 1.1 * sigma * math.sqrt(2.0 * math.log(max(p * T, 2)) / T)


class LassoDesign:
    """Standardized design and Gram matrix for repeated LASSO fits on fixed features.

    Columns are divided by their root mean square (after centering when an
    intercept is fit), so the penalty acts on the standardized coefficients
    and coefficients are mapped back to the original scale.
    """

    def __init__(self, features: np.ndarray, fit_intercept: bool = False):
        X = np.asarray(features, dtype=float)
        T, p = X.shape
        if T < 2:
            raise DimensionError("LASSO needs T >= 2")
        self.T, self.p = T, p
        self.fit_intercept = fit_intercept
        self.means = X.mean(axis=0) if fit_intercept else np.zeros(p)
        Xc = X - self.means if fit_intercept else X
        scale = np.sqrt(np.mean(Xc * Xc, axis=0))
        self.active_columns = scale > 0
        self.scale = np.where(self.active_columns, scale, 1.0)
        self.Xs = np.ascontiguousarray(Xc / self.scale)
        self.gram = np.ascontiguousarray(self.Xs.T @ self.Xs / T)

    def correlations(self, y: np.ndarray) -> np.ndarray:
        return self.Xs.T @ y / self.T

    def _solve(self, y, lam, cfg, gamma, trace):
        corr = self.correlations(y)
        yy = float(y @ y) / self.T
        it, conv = _coordinate_descent(
            self.gram, corr, yy, lam, cfg.tolerance, cfg.max_iterations, gamma, trace
        )
        return int(it), bool(conv)

    def fit(self, responses: np.ndarray, cfg: FitConfig, *, trace: bool = False) -> LinearFit:
        y = np.asarray(responses, dtype=float)
        if y.shape != (self.T,):
            raise DimensionError(f"responses have shape {y.shape}, expected ({self.T},)")
        if not np.all(np.isfinite(y)):
            raise ValidationError("responses must be finite")
        ybar = y.mean() if self.fit_intercept else 0.0
        yc = y - ybar
        gamma = np.zeros(self.p)
        buf = np.empty(cfg.max_iterations + 1 if trace else 0)
        if cfg.penalty_weight is None:
            # two-stage plug-in: sigma from Y, one refit with sigma from residuals
            sigma0 = float(np.std(yc, ddof=1))
            lam = plugin_penalty(sigma0, self.p, self.T)
            self._solve(yc, lam, cfg, gamma, np.empty(0))
            sigma1 = float(np.std(yc - self.Xs @ gamma, ddof=1))
            lam = plugin_penalty(sigma1, self.p, self.T)
        else:
            lam = float(cfg.penalty_weight)
        it, conv = self._solve(yc, lam, cfg, gamma, buf)
        beta = gamma / self.scale
        intercept = float(ybar - self.means @ beta) if self.fit_intercept else None
        return LinearFit(
            beta,
            Method.LASSO,
            intercept,
            converged=conv,
            iterations=it,
            penalty_weight=lam,
            objective_trace=buf[: it + 1].copy() if trace else None,
        )

    def kkt_violation(self, responses: np.ndarray, fit: LinearFit) -> float:
        """Largest violation of the LASSO optimality conditions on the standardized scale."""
        y = np.asarray(responses, dtype=float)
        yc = y - (y.mean() if self.fit_intercept else 0.0)
        gamma = fit.coefficients * self.scale
        grad = self.Xs.T @ (yc - self.Xs @ gamma) / self.T
        half = 0.5 * fit.penalty_weight
        active = gamma != 0
        viol = np.zeros(self.p)
        viol[active] = np.abs(grad[active] - half * np.sign(gamma[active]))
        viol[~active] = np.maximum(np.abs(grad[~active]) - half, 0.0)
        return float(viol[self.active_columns].max(initial=0.0))


def fit_lasso(z: AugmentedSeries, cfg: FitConfig, *, trace: bool = False) -> LinearFit:
    """Minimize ``(1/T)||Y - X beta||^2 + lam ||beta||_1`` by cyclic coordinate descent."""
    _check_finite(z)
    return LassoDesign(z.features, cfg.fit_intercept).fit(z.responses, cfg, trace=trace)


# ------------------------------------------------------------------ #
# Linear AR(K)
# ------------------------------------------------------------------ #


def lag_matrix(y: np.ndarray, K: int) -> np.ndarray:
    """Rows ``t = K+1..T`` of ``(Y_{t-1}, ..., Y_{t-K})``."""
    T = y.shape[0]
    return np.column_stack([y[K - k - 1 : T - k - 1] for k in range(K)])


def fit_ar_responses(y: np.ndarray, cfg: FitConfig) -> LinearFit:
    K = cfg.lag_order
    y = np.asarray(y, dtype=float)
    if y.shape[0] <= K:
        raise DimensionError(f"AR({K}) needs T > K, got T={y.shape[0]}")
    L = lag_matrix(y, K)
    if np.any(np.ptp(L, axis=0) == 0):
        raise NumericalError("a lag regressor has zero variance")
    rho, _, rank, _ = np.linalg.lstsq(L, y[K:], rcond=None)
    if rank < K:
        raise NumericalError("lag design is rank deficient")
    return LinearFit(rho, Method.AR_OLS)


def fit_ar(z: AugmentedSeries, cfg: FitConfig) -> LinearFit:
    """Least squares of ``Y_t`` on its ``K`` lags over ``t = K+1..T``; features are ignored.

    The first ``K`` values only serve as conditioning lags.
    """
    _check_finite(z)
    return fit_ar_responses(z.responses, cfg)


def residuals(z: AugmentedSeries, fit: LinearFit) -> np.ndarray:
    """Fitted residuals: length ``T`` for regressions, ``T - K`` (times ``K+1..T``) for AR."""
    if fit.method == Method.AR_OLS:
        K = fit.order
        if z.T <= K:
            raise DimensionError(f"AR({K}) residuals need T > K, got T={z.T}")
        return z.responses[K:] - lag_matrix(z.responses, K) @ fit.coefficients
    if fit.order != z.p:
        raise DimensionError(f"fit has {fit.order} coefficients, series has p={z.p}")
    return z.responses - fit.predict(z.features)


def fit(z: AugmentedSeries, method: Method | str, cfg: FitConfig) -> LinearFit:
    method = Method(method)
    if method == Method.LASSO:
        return fit_lasso(z, cfg)
    if method == Method.RIDGE:
        return fit_ridge(z, cfg)
    if method == Method.OLS:
        return fit_ols(z, cfg)
    return fit_ar(z, cfg)
