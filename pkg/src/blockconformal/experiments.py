"""Reproducible experiments: single prediction runs, coverage studies and decay studies.

Configuration is a flat ``key = value`` text file (``#`` starts a comment,
lists are comma separated, ``none`` clears an optional value); command-line
flags override file values.  Every CSV written here starts with a
``# config: {...}`` line holding the fully resolved configuration.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .diagnostics import DecayRow, ProcessConfig, ergodicity_decay_experiment
from .errors import ReplicationError, UnsupportedConfigurationError, ValidationError
from .estimators import FitConfig, Method
from .inference import (
    CandidateGrid,
    PredictionSet,
    build_grid,
    prediction_set,
    write_prediction_csv,
)
from .permutations import PermutationSet, make_cso, make_nob, make_ob, make_split
from .scores import ConformityScorer, ScoreKind
from .series import format_series_csv, read_series_csv
from .simulate import DgpConfig, child_seed, generate

log = logging.getLogger(__name__)

FULL_RHO_GRID = tuple(round(0.05 * i, 2) for i in range(20))


@dataclass
class ExperimentConfig:
    """All experiment settings; every key has a default."""

    experiment: str = "predict"
    # data: a CSV path, or the simulated design below
    input: str | None = None
    grid_file: str | None = None
    T: int = 100
    T1: int = 1
    p: int = 100
    rho: float = 0.0
    beta_norm: float = 2.0
    active_count: int = 5
    # permutation scheme
    scheme: str = "nob"
    block_size: int = 1
    block_mode: str = "strict"
    calibration_start: int | None = None
    # conformity score
    scorer: str = "lasso"
    penalty: float | None = None
    lag_order: int = 1
    norm_power: float = 1.0
    # inference
    alpha: float = 0.1
    grid_points: int = 100
    width_multiplier: float = 5.0
    # Monte Carlo
    replications: int = 500
    T_list: tuple[int, ...] = (100,)
    rho_list: tuple[float, ...] = (0.0,)
    K_list: tuple[int, ...] = (100, 400, 1600)
    process: str = "ar1"
    process_level: float = 1.0
    seed: int = 0
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValidationError("replications must be at least 1")
        if self.scheme not in ("nob", "cso", "ob", "split"):
            raise ValidationError(f"unknown scheme {self.scheme!r}")
        if self.scorer not in ("lasso", "ridge", "ols", "ar", "oracle"):
            raise ValidationError(f"unknown scorer {self.scorer!r}")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")

    def with_full_scale(self) -> ExperimentConfig:
        """The large study: 2000 replications, T in {100, 200}, rho from 0 to 0.95."""
        return dataclasses.replace(self, replications=2000, T_list=(100, 200), rho_list=FULL_RHO_GRID)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)


def _convert(name: str, raw: str, hint: str) -> Any:
    text = raw.strip()
    if text.lower() == "none":
        if "None" not in hint:
            raise ValidationError(f"{name} cannot be none")
        return None
    try:
        if hint.startswith("tuple[int"):
            return tuple(int(v) for v in text.split(",") if v.strip())
        if hint.startswith("tuple[float"):
            return tuple(float(v) for v in text.split(",") if v.strip())
        if hint.startswith("int"):
            return int(text)
        if hint.startswith("float"):
            return float(text)
    except ValueError:
        raise ValidationError(f"bad value for {name}: {raw!r}") from None
    return text


_FIELDS = {f.name: str(f.type) for f in dataclasses.fields(ExperimentConfig)}


def parse_overrides(pairs: Iterable[tuple[str, str]]) -> dict[str, Any]:
    out = {}
    for key, raw in pairs:
        key = key.strip().replace("-", "_")
        if key not in _FIELDS:
            raise ValidationError(f"unknown config key {key!r}")
        out[key] = _convert(key, raw, _FIELDS[key])
    return out


def read_config_file(path: str | Path) -> dict[str, Any]:
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs.append((key, value))
    return parse_overrides(pairs)


def load_config(path: str | Path | None = None, **overrides: Any) -> ExperimentConfig:
    values: dict[str, Any] = {}
    if path is not None:
        values.update(read_config_file(path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


# ------------------------------------------------------------------ #
# Building blocks from a config
# ------------------------------------------------------------------ #


def _default_calibration_start(T: int, T0: int, b: int) -> int:
    length = b * ((T - T0 // 2) // b)
    return T - length + 1


def build_scheme(cfg: ExperimentConfig, T: int, T0: int) -> PermutationSet:
    if cfg.scheme == "nob":
        return make_nob(T, cfg.block_size, mode=cfg.block_mode)
    if cfg.scheme == "cso":
        return make_cso(T)
    if cfg.scheme == "ob":
        return make_ob(T, cfg.block_size)
    start = cfg.calibration_start or _default_calibration_start(T, T0, cfg.block_size)
    return make_split(T, T0, start, cfg.block_size)


def build_scorer(cfg: ExperimentConfig, T: int, T0: int, oracle_beta: np.ndarray | None = None) -> ConformityScorer:
    training_size = None
    if cfg.scheme == "split":
        training_size = (cfg.calibration_start or _default_calibration_start(T, T0, cfg.block_size)) - 1
    if cfg.scorer == "oracle":
        if oracle_beta is None:
            raise UnsupportedConfigurationError("the oracle scorer needs simulated data (true beta)")
        return ConformityScorer.oracle(oracle_beta, cfg.norm_power)
    if cfg.scorer == "ar":
        return ConformityScorer(
            ScoreKind.AR_RESIDUAL, Method.AR_OLS, cfg.norm_power,
            FitConfig(lag_order=cfg.lag_order), training_size=training_size,
        )
    method = {"lasso": Method.LASSO, "ridge": Method.RIDGE, "ols": Method.OLS}[cfg.scorer]
    penalty = cfg.penalty
    if method == Method.RIDGE and penalty is None:
        penalty = 1.0
    return ConformityScorer(
        ScoreKind.REGRESSION_RESIDUAL, method, cfg.norm_power,
        FitConfig(penalty_weight=penalty), training_size=training_size,
    )


def _dgp(cfg: ExperimentConfig, T: int, rho: float, seed: int) -> DgpConfig:
    return DgpConfig(T=T, p=cfg.p, rho=rho, beta_norm=cfg.beta_norm, active_count=cfg.active_count, seed=seed, T1=cfg.T1)


def _read_grid_file(path: str) -> CandidateGrid:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(v) for v in line.split(",")])
    return CandidateGrid.from_points(np.array(rows))


def _csv_comment(cfg: ExperimentConfig) -> str:
    return f"config: {cfg.to_json()}"


def _open_out(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline=""), True


# ------------------------------------------------------------------ #
# predict
# ------------------------------------------------------------------ #


@dataclass
class PredictRun:
    prediction: PredictionSet
    summary: str
    true_tail: np.ndarray | None = None


def run_predict(cfg: ExperimentConfig, *, write: bool = True) -> PredictRun:
    """Algorithm end to end on one series: grid, p-values, retained set, CSV."""
    true_tail = None
    beta = None
    if cfg.input is not None:
        series = read_series_csv(cfg.input)
    else:
        data = generate(_dgp(cfg, cfg.T, cfg.rho, cfg.seed))
        series, true_tail, beta = data.series, data.true_tail, data.beta
    pis = build_scheme(cfg, series.T, series.T0)
    scorer = build_scorer(cfg, series.T, series.T0, beta)
    if cfg.grid_file is not None:
        grid = _read_grid_file(cfg.grid_file)
    else:
        grid = build_grid(series, scorer, cfg.grid_points, cfg.width_multiplier)
    ps = prediction_set(series, scorer, pis, grid, cfg.alpha)
    if ps.interval is not None:
        lo, hi = ps.interval
        span = f"interval=[{lo:.6g}, {hi:.6g}] length={hi - lo:.6g}"
    else:
        span = "interval=empty" if ps.empty else "interval=n/a"
    summary = (
        f"{span} retained={int(ps.retained.sum())}/{grid.H} alpha={cfg.alpha} "
        f"n={pis.n} scheme={cfg.scheme} b={cfg.block_size} scorer={cfg.scorer}"
    )
    if write:
        fh, close = _open_out(cfg.out)
        try:
            write_prediction_csv(ps, fh, [_csv_comment(cfg)])
        finally:
            if close:
                fh.close()
    return PredictRun(ps, summary, true_tail)


# ------------------------------------------------------------------ #
# coverage
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class ReplicationOutcome:
    covered: bool
    length: float
    grid_miss: bool


@dataclass(frozen=True)
class CoverageRow:
    T: int
    rho: float
    empirical_coverage: float
    mean_length: float
    replications: int
    mc_standard_error: float
    covered_count: int
    grid_miss: int

    @property
    def valid(self) -> bool:
        """Fewer than 1% of replications had the truth outside the grid."""
        return self.grid_miss < 0.01 * self.replications


@dataclass
class CoverageReport:
    rows: list[CoverageRow] = field(default_factory=list)

    def row(self, T: int, rho: float) -> CoverageRow:
        for r in self.rows:
            if r.T == T and math.isclose(r.rho, rho):
                return r
        raise KeyError((T, rho))


def coverage_replication(cfg: ExperimentConfig, T: int, rho: float, seed: int) -> ReplicationOutcome:
    """One simulated dataset: is the withheld response inside the hull of the retained set?"""
    if cfg.T1 != 1:
        raise UnsupportedConfigurationError("coverage studies support T1 = 1 only")
    data = generate(_dgp(cfg, T, rho, seed))
    series = data.series
    pis = build_scheme(cfg, series.T, series.T0)
    scorer = build_scorer(cfg, series.T, series.T0, data.beta)
    grid = build_grid(series, scorer, cfg.grid_points, cfg.width_multiplier)
    ps = prediction_set(series, scorer, pis, grid, cfg.alpha, warn=False)
    y = float(data.true_tail[0])
    col = grid.points[:, 0]
    miss = not (col[0] <= y <= col[-1])
    covered = (not miss) and ps.covers(y)
    return ReplicationOutcome(covered, ps.length, miss)


def _replicate(args):
    cfg, T, rho, index, seed = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return coverage_replication(cfg, T, rho, seed)
    except Exception as e:
        raise ReplicationError(index, str(seed), e) from e


def _map(fn, jobs: Sequence, workers: int):
    if workers == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order, so output is schedule independent
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_coverage(cfg: ExperimentConfig, *, write: bool = True) -> CoverageReport:
    """Empirical coverage and mean hull length for every ``(T, rho)`` cell.

    Replication ``r`` of cell ``c`` uses ``child_seed(seed, c, r)``.
    """
    report = CoverageReport()
    cells = [(T, rho) for T in cfg.T_list for rho in cfg.rho_list]
    for c, (T, rho) in enumerate(cells):
        jobs = [(cfg, T, rho, r, child_seed(cfg.seed, c, r)) for r in range(cfg.replications)]
        outcomes = _map(_replicate, jobs, cfg.workers)
        covered = sum(o.covered for o in outcomes)
        R = len(outcomes)
        cov = covered / R
        row = CoverageRow(
            T=T,
            rho=rho,
            empirical_coverage=cov,
            mean_length=float(np.mean([o.length for o in outcomes])),
            replications=R,
            mc_standard_error=math.sqrt(cov * (1 - cov) / R),
            covered_count=covered,
            grid_miss=sum(o.grid_miss for o in outcomes),
        )
        if not row.valid:
            log.warning("T=%d rho=%g: grid misses %d/%d exceed 1%%; cell flagged invalid", T, rho, row.grid_miss, R)
        log.info("T=%d rho=%g coverage=%.4f length=%.4f", T, rho, row.empirical_coverage, row.mean_length)
        report.rows.append(row)
    if write:
        fh, close = _open_out(cfg.out)
        try:
            write_coverage_csv(report, fh, cfg)
        finally:
            if close:
                fh.close()
    return report


def write_coverage_csv(report: CoverageReport, fh, cfg: ExperimentConfig) -> None:
    fh.write(f"# {_csv_comment(cfg)}\n")
    fh.write("T,rho,empirical_coverage,mean_length,replications,mc_standard_error,grid_miss,valid\n")
    for r in report.rows:
        fh.write(
            f"{r.T},{r.rho!r},{r.empirical_coverage!r},{r.mean_length!r},{r.replications},"
            f"{r.mc_standard_error!r},{r.grid_miss},{int(r.valid)}\n"
        )


# ------------------------------------------------------------------ #
# ergodicity
# ------------------------------------------------------------------ #


def run_ergodicity(cfg: ExperimentConfig, *, write: bool = True) -> list[DecayRow]:
    if cfg.scheme == "split":
        raise UnsupportedConfigurationError("the decay experiment needs a nob, cso or ob scheme")
    process = ProcessConfig(kind=cfg.process, rho=cfg.rho, level=cfg.process_level)
    rows = ergodicity_decay_experiment(
        process,
        cfg.scheme.upper(),
        cfg.K_list,
        cfg.replications,
        cfg.seed,
        block_size=cfg.block_size,
        norm_power=cfg.norm_power,
    )
    if write:
        fh, close = _open_out(cfg.out)
        try:
            fh.write(f"# {_csv_comment(cfg)}\n")
            fh.write("K,mean_gap,sd_gap,replications\n")
            for r in rows:
                fh.write(f"{r.K},{r.mean_gap!r},{r.sd_gap!r},{r.replications}\n")
        finally:
            if close:
                fh.close()
    return rows


# ------------------------------------------------------------------ #
# simulate
# ------------------------------------------------------------------ #


def run_simulate(cfg: ExperimentConfig, *, write: bool = True) -> str:
    """Dump one simulated dataset in the series CSV format; the withheld tail goes in a comment."""
    data = generate(_dgp(cfg, cfg.T, cfg.rho, cfg.seed))
    text = format_series_csv(
        data.series,
        [_csv_comment(cfg), "true_tail: " + ",".join(repr(float(v)) for v in data.true_tail)],
    )
    if write:
        fh, close = _open_out(cfg.out)
        try:
            fh.write(text)
        finally:
            if close:
                fh.close()
    return text
