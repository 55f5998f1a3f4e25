"""Synthetic data: sparse Gaussian regression with AR(1) errors, and AR(K) responses.

Randomness comes from numpy's PCG64 via ``default_rng``.  Replication ``r``
of an experiment with master seed ``s`` uses ``child_seed(s, r)`` (cells
of a multi-cell experiment add their index as an extra spawn-key entry).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import ValidationError
from .series import ObservedSeries


def child_seed(master_seed: int, *index: int) -> int:
    """Integer seed for the stream at spawn key ``index`` under ``master_seed``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(index))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class DgpConfig:
    T: int = 100
    p: int = 100
    rho: float = 0.0
    beta_norm: float = 2.0
    active_count: int = 5
    seed: int = 0
    T1: int = 1

    def __post_init__(self):
        if not 0 <= self.rho < 1:
            raise ValidationError(f"rho must lie in [0, 1), got {self.rho}")
        if not 1 <= self.T1 < self.T:
            raise ValidationError("need 1 <= T1 < T")
        if self.p < 0 or not 0 <= self.active_count <= self.p:
            raise ValidationError("need 0 <= active_count <= p")
        if not self.beta_norm > 0:
            raise ValidationError("beta_norm must be positive")


@dataclass(frozen=True, eq=False)
class SimulatedData:
    series: ObservedSeries
    true_tail: np.ndarray
    beta: np.ndarray
    errors: np.ndarray


def sparse_beta(p: int, active_count: int, beta_norm: float) -> np.ndarray:
    beta = np.zeros(p)
    if active_count:
        beta[:active_count] = beta_norm / np.sqrt(active_count)
    return beta


def ar1_errors(rng: np.random.Generator, T: int, rho: float) -> np.ndarray:
    """``e_t = rho e_{t-1} + xi_t``, ``xi_t ~ N(0, 1 - rho^2)``, from ``e_0 = 0``."""
    xi = rng.standard_normal(T) * np.sqrt(1.0 - rho**2)
    return signal.lfilter([1.0], [1.0, -rho], xi)


def generate(cfg: DgpConfig) -> SimulatedData:
    """``Y_t = X_t' beta + e_t`` with ``X_t ~ N(0, I_p)`` i.i.d. and AR(1) errors.

    The last ``T1`` responses are withheld as the coverage target.
    """
    rng = np.random.default_rng(cfg.seed)
    X = rng.standard_normal((cfg.T, cfg.p))
    errors = ar1_errors(rng, cfg.T, cfg.rho)
    beta = sparse_beta(cfg.p, cfg.active_count, cfg.beta_norm)
    y = X @ beta + errors
    T0 = cfg.T - cfg.T1
    return SimulatedData(ObservedSeries(y[:T0], X), y[T0:].copy(), beta, errors)


def companion_spectral_radius(rho_vec) -> float:
    rho = np.asarray(rho_vec, dtype=float).reshape(-1)
    K = rho.size
    C = np.zeros((K, K))
    C[0] = rho
    C[1:, :-1] = np.eye(K - 1)
    return float(np.max(np.abs(np.linalg.eigvals(C))))


def generate_ar_response(
    rho_vec,
    T: int,
    innovation_sd: float = 1.0,
    seed: int = 0,
    burn_in: int = 500,
) -> np.ndarray:
    """Simulate ``Y_t = sum_k rho_k Y_{t-k} + e_t`` with Gaussian innovations.

    Starts from zeros and discards ``burn_in`` steps.
    """
    rho = np.asarray(rho_vec, dtype=float).reshape(-1)
    if rho.size < 1:
        raise ValidationError("need at least one AR coefficient")
    if not companion_spectral_radius(rho) < 1:
        raise ValidationError("AR coefficients are not stationary (spectral radius >= 1)")
    if T < 1 or not innovation_sd > 0:
        raise ValidationError("need T >= 1 and innovation_sd > 0")
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(T + burn_in) * innovation_sd
    y = signal.lfilter([1.0], np.concatenate([[1.0], -rho]), e)
    return y[burn_in:]
