"""Randomization p-values and prediction sets by test inversion over a candidate grid."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGridError, DimensionError, ValidationError
from .permutations import PermutationSet
from .scores import ConformityScorer, score_grid, score_over_set, training_prediction
from .series import ObservedSeries, augment


class EmptyPredictionSetWarning(UserWarning):
    pass


class GridBoundaryWarning(UserWarning):
    """A retained candidate sits on the edge of the grid; the set may be truncated."""


class NonContiguousSetWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PValue:
    value: float
    n: int
    tie_count: int

    @property
    def exceed_count(self) -> int:
        """``#{pi : S(Z^pi) >= S(Z)}``, identity included."""
        return round(self.value * self.n)


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")


def pvalue_from_scores(scores: np.ndarray, identity_index: int = 0) -> PValue:
    """``(1/n) #{pi : S(Z^pi) >= S(Z)}`` where ``S(Z)`` is ``scores[identity_index]``."""
    s = np.asarray(scores, dtype=float)
    ref = s[identity_index]
    count = int(np.count_nonzero(s >= ref))
    ties = int(np.count_nonzero(s == ref))
    return PValue(count / s.size, s.size, ties)


def p_value(
    scorer: ConformityScorer,
    series: ObservedSeries,
    candidate: Sequence[float] | np.ndarray,
    pis: PermutationSet,
) -> PValue:
    """Randomization p-value of the hypothesis that the future responses equal ``candidate``."""
    z = augment(series, candidate)
    return pvalue_from_scores(score_over_set(scorer, z, pis), pis.identity_index)


def rank_threshold(alpha: float, n: int) -> int:
    """``k = ceil(n (1 - alpha))``, so that ``p <= alpha`` iff ``S(Z) > S^(k)``.

    Computed as ``n - #{m >= 1 : m/n <= alpha}`` with the same float division
    used for p-values, which keeps the equivalence exact in floating point.
    """
    _check_alpha(alpha)
    if n < 1:
        raise ValidationError("n must be positive")
    m = math.floor(n * alpha)
    while m + 1 <= n and (m + 1) / n <= alpha:
        m += 1
    while m > 0 and m / n > alpha:
        m -= 1
    return n - m


@dataclass(frozen=True, eq=False)
class CandidateGrid:
    """``H`` candidate tails (rows of ``points``) centred at ``center``."""

    points: np.ndarray
    center: np.ndarray
    half_width: float

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValidationError("a grid needs at least two candidate rows")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("grid points must be finite")
        if pts.shape[1] == 1:
            pts = np.sort(pts, axis=0)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))

    @property
    def H(self) -> int:
        return self.points.shape[0]

    @property
    def T1(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_points(cls, points) -> CandidateGrid:
        """Wrap user-supplied candidates (needed when ``T1 > 1``)."""
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return cls(pts, (lo + hi) / 2, float(np.max(hi - lo) / 2))

    @classmethod
    def equally_spaced(cls, center: float, half_width: float, H: int) -> CandidateGrid:
        if H < 2:
            raise ValidationError("H must be at least 2")
        if not half_width > 0:
            raise DegenerateGridError("grid half-width must be positive")
        pts = np.linspace(center - half_width, center + half_width, H)
        return cls(pts[:, None], np.array([center]), float(half_width))


def build_grid(
    series: ObservedSeries,
    scorer: ConformityScorer,
    H: int = 100,
    width_multiplier: float = 5.0,
) -> CandidateGrid:
    """Equally spaced grid around the history-only point prediction.

    Half-width is ``width_multiplier`` times the standard deviation of the
    training residuals. Only for ``T1 = 1``.
    """
    if series.T1 != 1:
        raise ValidationError("automatic grids need T1 = 1; pass CandidateGrid.from_points for T1 > 1")
    if not width_multiplier > 0:
        raise ValidationError("width_multiplier must be positive")
    pred, res = training_prediction(scorer, series)
    sd = float(np.std(res, ddof=1)) if res.size > 1 else 0.0
    if sd <= 1e-10 * max(1.0, float(np.std(series.responses))):
        raise DegenerateGridError("training residuals have zero variance; grid would be degenerate")
    return CandidateGrid.equally_spaced(float(pred[0]), width_multiplier * sd, H)


@dataclass(frozen=True, eq=False)
class PredictionSet:
    grid: CandidateGrid
    pvalues: np.ndarray
    retained: np.ndarray
    alpha: float
    n: int
    interval: tuple[float, float] | None = None
    contiguous: bool = True
    touches_boundary: bool = False

    @property
    def empty(self) -> bool:
        return not bool(self.retained.any())

    @property
    def length(self) -> float:
        """Hull length for ``T1 = 1`` (0 for an empty set)."""
        if self.interval is None:
            return 0.0
        return self.interval[1] - self.interval[0]

    def covers(self, value: float) -> bool:
        """Whether the hull ``[lower, upper]`` contains ``value`` (``T1 = 1``)."""
        if self.interval is None:
            return False
        return self.interval[0] <= value <= self.interval[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_prediction_csv(self, buf)
        return buf.getvalue()


def write_prediction_csv(ps: PredictionSet, fh, comments: Sequence[str] = ()) -> None:
    for c in comments:
        fh.write(f"# {c}\n")
    w = csv.writer(fh, lineterminator="\n")
    T1 = ps.grid.T1
    value_cols = ["candidate_value"] if T1 == 1 else [f"candidate_value_{j}" for j in range(1, T1 + 1)]
    w.writerow(["candidate_index", *value_cols, "p_value", "retained"])
    for h in range(ps.grid.H):
        w.writerow(
            [h, *(repr(float(v)) for v in ps.grid.points[h]), repr(float(ps.pvalues[h])), int(ps.retained[h])]
        )


def summarize(pvalues: np.ndarray, grid: CandidateGrid, alpha: float, n: int, *, warn: bool = True) -> PredictionSet:
    retained = pvalues > alpha
    interval = None
    contiguous = True
    touches = False
    if retained.any():
        idx = np.flatnonzero(retained)
        contiguous = bool(idx[-1] - idx[0] + 1 == idx.size)
        touches = bool(idx[0] == 0 or idx[-1] == grid.H - 1)
        if grid.T1 == 1:
            col = grid.points[:, 0]
            interval = (float(col[idx[0]]), float(col[idx[-1]]))
    if warn:
        if not retained.any():
            warnings.warn("prediction set is empty at this grid", EmptyPredictionSetWarning, stacklevel=3)
        if touches:
            warnings.warn("retained candidates touch the grid boundary", GridBoundaryWarning, stacklevel=3)
        if not contiguous and grid.T1 == 1:
            warnings.warn("retained candidates are not contiguous", NonContiguousSetWarning, stacklevel=3)
    return PredictionSet(grid, pvalues, retained, alpha, n, interval, contiguous, touches)


def prediction_set(
    series: ObservedSeries,
    scorer: ConformityScorer,
    pis: PermutationSet,
    grid: CandidateGrid,
    alpha: float,
    *,
    warn: bool = True,
) -> PredictionSet:
    """Keep every grid candidate whose randomization p-value exceeds ``alpha``."""
    _check_alpha(alpha)
    if grid.T1 != series.T1:
        raise DimensionError(f"grid has T1={grid.T1}, series has T1={series.T1}")
    scores = score_grid(scorer, series, grid.points, pis)
    ref = scores[:, pis.identity_index][:, None]
    pvalues = np.count_nonzero(scores >= ref, axis=1) / pis.n
    return summarize(pvalues, grid, alpha, pis.n, warn=warn)
