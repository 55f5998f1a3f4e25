"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py``; a PASS/FAIL line per criterion
is printed in the terminal summary.
"""

import math
import warnings

import numpy as np
import pytest

from blockconformal.diagnostics import ProcessConfig, ergodicity_decay_experiment
from blockconformal.estimators import FitConfig, LassoDesign, fit_lasso, fit_ols, fit_ridge
from blockconformal.experiments import ExperimentConfig, run_coverage
from blockconformal.inference import p_value, pvalue_from_scores, rank_threshold
from blockconformal.permutations import make_cso, make_nob, make_ob, make_split, verify_group
from blockconformal.scores import ConformityScorer, score_over_set
from blockconformal.series import AugmentedSeries, ObservedSeries, apply_permutation, augment
from blockconformal.simulate import DgpConfig, child_seed, generate

from oracles import exact_rules, nob_pvalue_by_hand, random_score_vector

pytestmark = pytest.mark.slow

RHOS = (0.0, 0.3, 0.6, 0.95)


def criterion(number, title):
    return pytest.mark.criterion(number=number, title=title)


@pytest.fixture(scope="module")
def coverage_report():
    cfg = ExperimentConfig(
        experiment="coverage",
        T_list=(100, 200),
        rho_list=RHOS,
        p=100,
        scheme="nob",
        block_size=1,
        scorer="lasso",
        alpha=0.1,
        grid_points=100,
        replications=500,
        seed=20240,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_coverage(cfg, write=False)


def describe(record_property, **values):
    record_property("detail", ", ".join(f"{k}={v}" for k, v in values.items()))


@criterion(1, "exact validity: rho=0, T=100, coverage >= 0.87")
def test_exact_validity(coverage_report, record_property):
    row = coverage_report.row(100, 0.0)
    describe(record_property, coverage=f"{row.empirical_coverage:.3f}", grid_miss=row.grid_miss)
    assert row.valid
    assert row.empirical_coverage >= 0.87


@criterion(2, "approximate validity: rho in {0.3, 0.6} within 0.90 +/- 0.05; rho=0.95 in [0.80, 0.92]")
def test_approximate_validity(coverage_report, record_property):
    cov = {rho: coverage_report.row(100, rho).empirical_coverage for rho in (0.3, 0.6, 0.95)}
    describe(record_property, **{f"rho={k}": f"{v:.3f}" for k, v in cov.items()})
    assert all(coverage_report.row(100, rho).valid for rho in cov)
    assert abs(cov[0.3] - 0.90) <= 0.05
    assert abs(cov[0.6] - 0.90) <= 0.05
    assert 0.80 <= cov[0.95] <= 0.92


@criterion(3, "length trend: mean length at T=200 <= T=100 for rho in {0, 0.3, 0.6}")
def test_length_trend(coverage_report, record_property):
    lengths = {rho: (coverage_report.row(100, rho).mean_length, coverage_report.row(200, rho).mean_length) for rho in (0.0, 0.3, 0.6)}
    describe(record_property, **{f"rho={k}": f"{a:.3f}->{b:.3f}" for k, (a, b) in lengths.items()})
    for short, long in lengths.values():
        assert long <= short


@criterion(4, "group axioms for NOB, CSO, OB, SPLIT with T <= 24; OB equals CSO")
def test_group_axioms(record_property):
    checked = 0
    for T in range(1, 25):
        cso = make_cso(T)
        assert verify_group(cso)
        checked += 1
        for b in (d for d in range(1, T + 1) if T % d == 0):
            assert verify_group(make_nob(T, b))
            ob = make_ob(T, b)
            assert verify_group(ob)
            assert ob.mapping_set() == cso.mapping_set()
            checked += 2
        for T0 in range(1, T):
            for start in range(2, T0 + 1):
                for b in (d for d in range(1, T - start + 2) if (T - start + 1) % d == 0):
                    assert verify_group(make_split(T, T0, start, b))
                    checked += 1
    describe(record_property, groups=checked)


@criterion(5, "order-statistic identity on 10^4 random score vectors")
def test_order_statistic_identity(record_property):
    rng = np.random.default_rng(5)
    violations = 0
    for _ in range(10_000):
        s, alpha = random_score_vector(rng)
        by_p, by_rank = exact_rules(s, alpha)
        a = float(alpha)
        k = rank_threshold(a, s.size)
        pkg_p = pvalue_from_scores(s).value <= a
        pkg_rank = bool(s[0] > np.sort(s)[k - 1])
        violations += not (by_p == by_rank == pkg_p == pkg_rank)
    describe(record_property, violations=violations)
    assert violations == 0


@criterion(6, "brute-force p-value oracle: T=6, b=2, 100 datasets")
def test_bruteforce_pvalue(record_property):
    rng = np.random.default_rng(6)
    pis = make_nob(6, 2)
    mismatches = 0
    for _ in range(100):
        p = int(rng.integers(1, 4))
        X = rng.standard_normal((6, p))
        beta = rng.standard_normal(p)
        y = X @ beta + rng.standard_normal(6)
        for c in (y[5], rng.normal(y[5], 2.0)):
            yy = np.concatenate([y[:5], [c]])
            got = p_value(ConformityScorer.oracle(beta), ObservedSeries(y[:5], X), [c], pis).value
            mismatches += got != nob_pvalue_by_hand(yy, X, beta, 2)
    describe(record_property, mismatches=mismatches)
    assert mismatches == 0


@criterion(7, "LASSO: orthonormal soft-threshold within 1e-6 on 100 instances; KKT at p=T=100")
def test_lasso_correctness(record_property):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        p = int(rng.integers(1, 21))
        T = int(rng.integers(p + 1, 4 * p + 20))
        Q, _ = np.linalg.qr(rng.standard_normal((T, p)))
        X = math.sqrt(T) * Q
        y = X @ rng.standard_normal(p) + rng.standard_normal(T)
        lam = float(rng.uniform(0.01, 2.0))
        c = X.T @ y / T
        expected = np.sign(c) * np.maximum(np.abs(c) - lam / 2, 0.0)
        z = AugmentedSeries(y, X, T - 1)
        worst = max(worst, float(np.max(np.abs(fit_lasso(z, FitConfig(penalty_weight=lam)).coefficients - expected))))
    d = generate(DgpConfig(T=100, p=100, seed=7))
    z = augment(d.series, d.true_tail)
    design = LassoDesign(z.features)
    fit = design.fit(z.responses, FitConfig())
    kkt = design.kkt_violation(z.responses, fit)
    describe(record_property, max_error=f"{worst:.2e}", kkt_violation=f"{kkt:.2e}", converged=fit.converged)
    assert worst <= 1e-6
    assert fit.converged and kkt <= 1e-6


@criterion(8, "estimator permutation invariance at T=12; fast path equals naive within 1e-9")
def test_permutation_invariance(record_property):
    rng = np.random.default_rng(8)
    X = rng.standard_normal((12, 4))
    y = X @ [1.0, -0.5, 0.0, 2.0] + rng.standard_normal(12)
    z = AugmentedSeries(y, X, 11)
    ridge_cfg, lasso_cfg = FitConfig(penalty_weight=0.5), FitConfig(penalty_weight=0.2)
    base = (fit_ridge(z, ridge_cfg).coefficients, fit_ols(z).coefficients, fit_lasso(z, lasso_cfg).coefficients)
    sets = [make_cso(12)] + [make_nob(12, b) for b in (1, 2, 3, 4, 6, 12)]
    err = np.zeros(4)
    for pis in sets:
        for pi in pis:
            zp = apply_permutation(z, pi)
            err[0] = max(err[0], np.max(np.abs(fit_ridge(zp, ridge_cfg).coefficients - base[0])))
            err[1] = max(err[1], np.max(np.abs(fit_ols(zp).coefficients - base[1])))
            err[2] = max(err[2], np.max(np.abs(fit_lasso(zp, lasso_cfg).coefficients - base[2])))
        for scorer in (ConformityScorer.ridge(0.5), ConformityScorer.ols(), ConformityScorer.lasso(0.2), ConformityScorer.lasso()):
            fast = score_over_set(scorer, z, pis, fast=True)
            naive = score_over_set(scorer, z, pis, fast=False)
            err[3] = max(err[3], np.max(np.abs(fast - naive)))
    describe(record_property, ridge=f"{err[0]:.1e}", ols=f"{err[1]:.1e}", lasso=f"{err[2]:.1e}", fast_path=f"{err[3]:.1e}")
    assert err[0] <= 1e-10 and err[1] <= 1e-10
    assert err[2] <= 1e-6
    assert err[3] <= 1e-9


@criterion(9, "ergodicity decay: rho=0.5, K in {100, 400, 1600}, strictly decreasing, ratio < 0.5")
def test_ergodicity_decay(record_property):
    rows = ergodicity_decay_experiment(ProcessConfig("ar1", 0.5), "NOB", [100, 400, 1600], 200, seed=9)
    gaps = [r.mean_gap for r in rows]
    describe(record_property, **{f"K={r.K}": f"{r.mean_gap:.4f}" for r in rows}, ratio=f"{gaps[2] / gaps[0]:.3f}")
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] / gaps[0] < 0.5


@criterion(10, "p-value uniformity: oracle score, rho=0, 2000 replications, alpha in {0.05, 0.1, 0.2} +/- 0.03")
def test_pvalue_uniformity(record_property):
    pvals = np.empty(2000)
    pis = make_nob(100, 1)
    for r in range(2000):
        d = generate(DgpConfig(T=100, p=100, rho=0.0, seed=child_seed(10, r)))
        pvals[r] = p_value(ConformityScorer.oracle(d.beta), d.series, d.true_tail, pis).value
    rates = {a: float(np.mean(pvals <= a)) for a in (0.05, 0.1, 0.2)}
    describe(record_property, **{f"alpha={a}": f"{v:.4f}" for a, v in rates.items()})
    for a, v in rates.items():
        assert abs(v - a) <= 0.03


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
