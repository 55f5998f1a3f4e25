"""Time-series data model: observed history, augmented data and permutation action.

Indices follow the usual 1-based time convention in docstrings; arrays are
0-based, so time ``t`` lives at position ``t - 1``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import CsvParseError, DimensionError, ValidationError

if TYPE_CHECKING:
    from .permutations import Permutation


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


def _as_features(features, n_rows: int | None = None) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        # a bare vector is read as p = 0 columns only when empty
        x = x.reshape(-1, 1) if x.size else np.zeros((n_rows or 0, 0))
    if x.ndim != 2:
        raise DimensionError(f"features must be a 2-d array, got ndim={x.ndim}")
    return x


@dataclass(frozen=True, eq=False)
class ObservedSeries:
    """History ``(Y_t, X_t)`` for ``t <= T0`` plus future features ``X_t`` for ``t > T0``.

    ``features`` has ``T0 + T1`` rows, ``responses`` has ``T0`` entries.
    """

    responses: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.responses, dtype=float).reshape(-1)
        x = _as_features(self.features, n_rows=None)
        if y.size < 1:
            raise DimensionError("need at least one observed response (T0 >= 1)")
        if x.shape[0] <= y.size:
            raise DimensionError(
                f"features has {x.shape[0]} rows; need more than T0={y.size} "
                "so that at least one future row exists (T1 >= 1)"
            )
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise ValidationError("responses and features must be finite")
        object.__setattr__(self, "responses", _frozen(y))
        object.__setattr__(self, "features", _frozen(x))

    @property
    def T0(self) -> int:
        return self.responses.shape[0]

    @property
    def T(self) -> int:
        return self.features.shape[0]

    @property
    def T1(self) -> int:
        return self.T - self.T0

    @property
    def p(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True, eq=False)
class AugmentedSeries:
    """Length-``T`` series whose last ``T1`` responses are hypothesized values."""

    responses: np.ndarray
    features: np.ndarray
    T0: int

    def __post_init__(self):
        y = np.asarray(self.responses, dtype=float).reshape(-1)
        x = _as_features(self.features, n_rows=y.size)
        if x.shape[0] != y.size:
            raise DimensionError(
                f"responses ({y.size}) and features ({x.shape[0]} rows) differ in length"
            )
        if not 1 <= self.T0 < y.size:
            raise DimensionError(f"T0={self.T0} must satisfy 1 <= T0 < T={y.size}")
        object.__setattr__(self, "responses", _frozen(y))
        object.__setattr__(self, "features", _frozen(x))

    @property
    def T(self) -> int:
        return self.responses.shape[0]

    @property
    def T1(self) -> int:
        return self.T - self.T0

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def hypothesized_tail(self) -> np.ndarray:
        return self.responses[self.T0 :]

    @property
    def points(self) -> list[tuple[float, np.ndarray]]:
        """The ``(response, feature row)`` pairs in time order."""
        return [(float(self.responses[t]), self.features[t]) for t in range(self.T)]

    def with_responses(self, responses: np.ndarray) -> AugmentedSeries:
        return AugmentedSeries(responses, self.features, self.T0)


def augment(series: ObservedSeries, candidate: Sequence[float] | np.ndarray) -> AugmentedSeries:
    """Join the history with a hypothesized future response vector."""
    y = np.atleast_1d(np.asarray(candidate, dtype=float))
    if y.ndim != 1 or y.size != series.T1:
        raise DimensionError(f"candidate has length {y.size}, expected T1={series.T1}")
    if not np.all(np.isfinite(y)):
        raise ValidationError("candidate values must be finite")
    return AugmentedSeries(np.concatenate([series.responses, y]), series.features, series.T0)


def apply_permutation(z: AugmentedSeries, pi: Permutation | Sequence[int]) -> AugmentedSeries:
    """Return ``Z^pi``: the point at time ``t`` becomes ``z``'s point at ``pi(t)``.

    Responses and feature rows move together. ``pi`` is a ``Permutation`` or a
    1-based mapping sequence.
    """
    mapping = np.asarray(getattr(pi, "mapping", pi), dtype=np.intp)
    if mapping.shape != (z.T,):
        raise DimensionError(f"permutation has size {mapping.size}, series has T={z.T}")
    idx = mapping - 1
    return AugmentedSeries(z.responses[idx], z.features[idx], z.T0)


# ------------------------------------------------------------------ #
# CSV ingestion / export
# ------------------------------------------------------------------ #


def parse_series_csv(text: str) -> ObservedSeries:
    """Parse the ``t,y,x1,...,xp`` format.

    Lines starting with ``#`` are comments. Rows with an empty ``y`` are
    future feature rows and must come last.
    """
    header = None
    responses: list[float] = []
    rows: list[list[float]] = []
    future_started = False
    expected_t = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        fields = next(csv.reader([raw]))
        fields = [f.strip() for f in fields]
        if header is None:
            p = len(fields) - 2
            want = ["t", "y"] + [f"x{j}" for j in range(1, p + 1)]
            if p < 0 or fields != want:
                raise CsvParseError(
                    f"header must be {','.join(want) if p >= 0 else 't,y,x1,...,xp'}, "
                    f"got {','.join(fields)}",
                    lineno,
                )
            header = fields
            continue
        if len(fields) != len(header):
            raise CsvParseError(f"expected {len(header)} fields, got {len(fields)}", lineno)
        try:
            t = int(fields[0])
        except ValueError:
            raise CsvParseError(f"time index {fields[0]!r} is not an integer", lineno) from None
        if t != expected_t:
            raise CsvParseError(f"time index {t} out of sequence, expected {expected_t}", lineno)
        expected_t += 1
        try:
            x = [float(v) for v in fields[2:]]
        except ValueError:
            raise CsvParseError("feature value is not a number", lineno) from None
        if not all(math.isfinite(v) for v in x):
            raise CsvParseError("feature values must be finite", lineno)
        if fields[1] == "":
            future_started = True
        else:
            if future_started:
                raise CsvParseError("observed response after a future (empty y) row", lineno)
            try:
                yv = float(fields[1])
            except ValueError:
                raise CsvParseError(f"response {fields[1]!r} is not a number", lineno) from None
            if not math.isfinite(yv):
                raise CsvParseError("response must be finite", lineno)
            responses.append(yv)
        rows.append(x)
    if header is None:
        raise CsvParseError("empty file: missing header", 1)
    if not responses:
        raise CsvParseError("no observed responses")
    if not future_started:
        raise CsvParseError("no future rows (rows with empty y)")
    features = np.array(rows, dtype=float).reshape(len(rows), len(header) - 2)
    return ObservedSeries(np.array(responses), features)


def read_series_csv(path: str | Path) -> ObservedSeries:
    return parse_series_csv(Path(path).read_text())


def format_series_csv(series: ObservedSeries, comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "y"] + [f"x{j}" for j in range(1, series.p + 1)])
    for t in range(series.T):
        y = repr(float(series.responses[t])) if t < series.T0 else ""
        w.writerow([t + 1, y] + [repr(float(v)) for v in series.features[t]])
    return buf.getvalue()


def write_series_csv(series: ObservedSeries, path: str | Path, comments: Sequence[str] = ()) -> None:
    Path(path).write_text(format_series_csv(series, comments))
