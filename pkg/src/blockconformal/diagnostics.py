"""Empirical checks of approximate ergodicity and of score estimation error.

The randomization CDF uses the strict convention ``#{S(Z^pi) < x} / n``;
p-values (in ``inference``) use ``>=``.  The two are kept separate on purpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .errors import UnsupportedConfigurationError, ValidationError
from .permutations import PermutationSet, Scheme, make_cso, make_nob, make_ob
from .scores import ConformityScorer, score_over_set
from .series import AugmentedSeries
from .simulate import child_seed, generate_ar_response

CdfLike = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class RandomizationCdf:
    sorted_scores: np.ndarray

    def __post_init__(self):
        s = np.sort(np.asarray(self.sorted_scores, dtype=float).reshape(-1))
        if s.size < 1:
            raise ValidationError("need at least one score")
        s.flags.writeable = False
        object.__setattr__(self, "sorted_scores", s)

    @property
    def n(self) -> int:
        return self.sorted_scores.size

    def __call__(self, x):
        """``#{scores < x} / n``."""
        return np.searchsorted(self.sorted_scores, x, side="left") / self.n

    def right_limit(self, x):
        """``#{scores <= x} / n``."""
        return np.searchsorted(self.sorted_scores, x, side="right") / self.n


def randomization_cdf(scorer: ConformityScorer, z: AugmentedSeries, pis: PermutationSet) -> RandomizationCdf:
    return RandomizationCdf(score_over_set(scorer, z, pis))


def _evaluate(reference: CdfLike, x: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(reference(x), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(reference(v)) for v in x])


def sup_cdf_gap(cdf: RandomizationCdf, reference: CdfLike) -> float:
    """``sup_x |F~(x) - F(x)|`` evaluated exactly at the jump points of ``F~``.

    ``reference`` should be left-continuous (``P(S < x)``); for continuous
    distributions any CDF works.  Both one-sided limits are checked at every
    jump, which suffices because ``F`` is monotone between jumps.
    """
    jumps = np.unique(cdf.sorted_scores)
    right = np.nextafter(jumps, np.inf)
    f_at = _evaluate(reference, jumps)
    f_right = _evaluate(reference, right)
    left_gap = np.abs(cdf(jumps) - f_at)
    right_gap = np.abs(cdf.right_limit(jumps) - f_right)
    return float(max(left_gap.max(), right_gap.max()))


def half_normal_cdf(x):
    """``P(|N(0,1)| < x)``."""
    return stats.halfnorm.cdf(x)


def chi_cdf(df: int) -> CdfLike:
    """CDF of the Euclidean norm of ``df`` independent standard normals."""
    return lambda x: stats.chi.cdf(x, df)


def point_mass_cdf(c: float) -> CdfLike:
    """``P(S < x)`` for ``S = c`` almost surely."""
    return lambda x: (np.asarray(x, dtype=float) > c).astype(float)


@dataclass(frozen=True)
class ConditionAReport:
    mse: float
    pointwise_error: float
    n: int


def condition_a_report(
    scorer: ConformityScorer,
    oracle: ConformityScorer,
    z: AugmentedSeries,
    pis: PermutationSet,
) -> ConditionAReport:
    """Mean squared and identity-point discrepancy between a score and its oracle."""
    s = score_over_set(scorer, z, pis)
    s_star = score_over_set(oracle, z, pis)
    d = s - s_star
    return ConditionAReport(float(np.mean(d * d)), float(abs(d[pis.identity_index])), pis.n)


# ------------------------------------------------------------------ #
# Decay experiment
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class ProcessConfig:
    """Error process for the decay experiment.

    ``kind="ar1"``: stationary Gaussian AR(1) with unit marginal variance.
    ``kind="constant"``: every error equals ``level``.
    """

    kind: str = "ar1"
    rho: float = 0.0
    level: float = 1.0

    def __post_init__(self):
        if self.kind not in ("ar1", "constant"):
            raise ValidationError(f"unknown process kind {self.kind!r}")
        if not -1 < self.rho < 1:
            raise ValidationError("rho must lie in (-1, 1)")

    def sample(self, T: int, seed: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(T, float(self.level))
        return generate_ar_response([self.rho], T, np.sqrt(1.0 - self.rho**2), seed)


@dataclass(frozen=True)
class DecayRow:
    K: int
    mean_gap: float
    sd_gap: float
    replications: int


def default_reference(process: ProcessConfig, block_size: int, norm_power: float) -> CdfLike:
    """Known marginal CDF of the oracle block score, or raise if none is available."""
    if process.kind == "constant":
        return point_mass_cdf(block_size ** (1.0 / norm_power) * abs(process.level))
    if block_size == 1:
        return half_normal_cdf
    if process.rho == 0 and norm_power == 2:
        return chi_cdf(block_size)
    raise UnsupportedConfigurationError(
        f"no closed-form marginal for ar1(rho={process.rho}) with block size {block_size} "
        f"and norm power {norm_power}; supply a reference CDF"
    )


def _permutation_set(scheme: Scheme, T: int, b: int) -> PermutationSet:
    if scheme == Scheme.NOB:
        return make_nob(T, b)
    if scheme == Scheme.CSO:
        return make_cso(T)
    if scheme == Scheme.OB:
        return make_ob(T, b)
    raise UnsupportedConfigurationError(f"scheme {scheme.value} is not supported by the decay experiment")


def ergodicity_decay_experiment(
    process: ProcessConfig,
    scheme: Scheme | str,
    K_list: Sequence[int],
    replications: int,
    seed: int,
    *,
    block_size: int = 1,
    norm_power: float = 1.0,
    reference: CdfLike | None = None,
) -> list[DecayRow]:
    """Mean sup-gap between the oracle randomization CDF and the true score CDF, per ``K``.

    Each replication draws ``T = K * block_size`` errors and scores the last
    block with the oracle l_p norm.  Replication ``r`` at the ``i``-th ``K``
    uses ``child_seed(seed, i, r)``.
    """
    scheme = Scheme(scheme)
    if replications < 1:
        raise ValidationError("replications must be positive")
    ref = reference if reference is not None else default_reference(process, block_size, norm_power)
    oracle = ConformityScorer.oracle(np.zeros(0), norm_power)
    rows = []
    for i, K in enumerate(K_list):
        T = K * block_size
        if K < 2:
            raise ValidationError("K must be at least 2")
        pis = _permutation_set(scheme, T, block_size)
        features = np.zeros((T, 0))
        gaps = np.empty(replications)
        for r in range(replications):
            e = process.sample(T, child_seed(seed, i, r))
            z = AugmentedSeries(e, features, T - block_size)
            gaps[r] = sup_cdf_gap(randomization_cdf(oracle, z, pis), ref)
        sd = float(np.std(gaps, ddof=1)) if replications > 1 else 0.0
        rows.append(DecayRow(int(K), float(gaps.mean()), sd, replications))
    return rows
