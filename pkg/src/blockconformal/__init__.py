"""Conformal prediction for time series with block permutation groups."""

from .diagnostics import (
    ConditionAReport,
    ProcessConfig,
    RandomizationCdf,
    condition_a_report,
    ergodicity_decay_experiment,
    randomization_cdf,
    sup_cdf_gap,
)
from .errors import (
    ConformalError,
    CsvParseError,
    DegenerateGridError,
    DimensionError,
    DivisibilityError,
    NumericalError,
    UnsupportedConfigurationError,
    ValidationError,
)
from .estimators import FitConfig, LinearFit, Method, fit_ar, fit_lasso, fit_ols, fit_ridge, residuals
from .inference import (
    CandidateGrid,
    PredictionSet,
    PValue,
    build_grid,
    p_value,
    prediction_set,
    rank_threshold,
)
from .permutations import (
    Permutation,
    PermutationSet,
    Scheme,
    make_cso,
    make_nob,
    make_ob,
    make_split,
    verify_group,
)
from .scores import ConformityScorer, ScoreKind, score, score_over_set
from .series import AugmentedSeries, ObservedSeries, apply_permutation, augment, read_series_csv
from .simulate import DgpConfig, generate, generate_ar_response

__version__ = "0.1.0"

__all__ = [
    "apply_permutation",
    "augment",
    "AugmentedSeries",
    "build_grid",
    "CandidateGrid",
    "condition_a_report",
    "ConditionAReport",
    "ConformalError",
    "ConformityScorer",
    "CsvParseError",
    "DegenerateGridError",
    "DgpConfig",
    "DimensionError",
    "DivisibilityError",
    "ergodicity_decay_experiment",
    "fit_ar",
    "fit_lasso",
    "fit_ols",
    "fit_ridge",
    "FitConfig",
    "generate",
    "generate_ar_response",
    "LinearFit",
    "make_cso",
    "make_nob",
    "make_ob",
    "make_split",
    "Method",
    "NumericalError",
    "ObservedSeries",
    "p_value",
    "Permutation",
    "PermutationSet",
    "prediction_set",
    "PredictionSet",
    "ProcessConfig",
    "PValue",
    "randomization_cdf",
    "RandomizationCdf",
    "rank_threshold",
    "read_series_csv",
    "residuals",
    "Scheme",
    "score",
    "score_over_set",
    "ScoreKind",
    "sup_cdf_gap",
    "UnsupportedConfigurationError",
    "ValidationError",
    "verify_group",
]
