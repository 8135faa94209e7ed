#!/usr/bin/env python3
"""
Tests for the linearity statistic: critical values, gradient, covariance
and the end-to-end test
"""

import json
import math

import numpy as np
import pytest
from scipy import stats

from src.errors import DimensionError, NotPositiveDefiniteError, SieveDimensionWarning
from src.estimation.critical_values import (
    chi2_pvalue, chi2_standardized_critical, choose_p, normal_critical, normal_pvalue,
)
from src.estimation.estimator import fit_2sls
from src.estimation.instruments import build_mc_instruments
from src.estimation.lmtest import (
    covariance_Hhat, gradient_dhat, linearity_test_from_fit, partitioned_quad_form,
    quadratic_form, run_test, run_test_with_fit, statistic,
)
from src.estimation.sieve import build_blocks
from src.models.estimation import BasisSpec
from src.spatial.weights import gen_circulant, gen_random_contiguity

BETA0 = np.array([0.5, -2.0, 1.0])


def _null_data(W, seed=0, lam=0.4):
    rng = np.random.default_rng(seed)
    n = W.n
    X = np.column_stack([np.ones(n), rng.normal(size=n), rng.normal(size=n)])
    eps = rng.normal(size=n) * np.sqrt(rng.chisquare(2, size=n))
    y = np.linalg.solve(np.eye(n) - lam * W.toarray(), X @ BETA0 + eps)
    return y, X


@pytest.mark.parametrize("p,expected", [
    (4, 1.9403), (5, 1.9195), (7, 1.8887), (8, 1.8767), (10, 1.8575), (12, 1.8424),
])
def test_standardized_chi2_critical_values(p, expected):
    assert chi2_standardized_critical(p, 0.05) == pytest.approx(expected, abs=1e-3)


def test_normal_reference():
    assert normal_critical(0.05) == pytest.approx(1.6449, abs=1e-4)
    assert normal_pvalue(0.0) == pytest.approx(0.5)
    assert chi2_pvalue(2.0, 2) == pytest.approx(math.exp(-1.0))
    with pytest.raises(ValueError):
        normal_critical(1.5)
    with pytest.raises(ValueError):
        chi2_standardized_critical(0, 0.05)


@pytest.mark.parametrize("n,p", [(8, 2), (100, 4), (343, 7), (992, 9), (1000, 10), (1980, 12)])
def test_choose_p(n, p):
    assert choose_p(n) == p


def test_choose_p_rejects_small_n():
    with pytest.raises(ValueError):
        choose_p(7)


def test_statistic_by_hand():
    result = statistic(np.array([1.0, 0.0]), np.eye(2), n=2, p=2)
    assert result.quad_form == pytest.approx(2.0)
    assert result.t_stat == pytest.approx(0.0)
    assert result.pval_chi2 == pytest.approx(math.exp(-1.0))
    assert result.pval_normal == pytest.approx(0.5)
    assert not result.reject_chi2 and not result.reject_normal
    assert result.crit_chi2_std == pytest.approx(chi2_standardized_critical(2, 0.05))


def test_indefinite_covariance_reports_pivot():
    with pytest.raises(NotPositiveDefiniteError) as excinfo:
        quadratic_form(np.array([1.0, 1.0]), np.diag([1.0, -1.0]), n=10)
    assert excinfo.value.pivot == pytest.approx(-1.0)


def test_quadratic_form_shape_check():
    with pytest.raises(DimensionError):
        quadratic_form(np.ones(3), np.eye(2), n=5)


@pytest.mark.parametrize("seed", range(25))
def test_against_explicit_inverses(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(25, 41))
    q = int(rng.integers(1, 4)) + 4  # p sieve columns, Wy and three regressors
    m = q + int(rng.integers(0, 10 - q))
    U = rng.normal(size=(n, q))
    Z = rng.normal(size=(n, m))
    eps = rng.normal(size=n)

    PZ = Z @ np.linalg.inv(Z.T @ Z) @ Z.T
    d = -(2.0 / n) * U.T @ PZ @ eps
    J = Z.T @ U / n
    Minv = np.linalg.inv(Z.T @ Z / n)
    Omega = Z.T @ np.diag(eps ** 2) @ Z / n
    H = 4.0 * J.T @ Minv @ Omega @ Minv @ J
    quad = n * d @ np.linalg.inv(H) @ d

    d_hat = gradient_dhat(U, Z, eps)
    H_hat = covariance_Hhat(U, Z, eps)
    assert d_hat == pytest.approx(d, rel=1e-9, abs=1e-12)
    assert H_hat == pytest.approx(H, rel=1e-9, abs=1e-12)
    assert quadratic_form(d_hat, H_hat, n) == pytest.approx(quad, rel=1e-9)


def test_gradient_vanishes_on_null_columns():
    W = gen_random_contiguity(300, np.random.default_rng(4))
    y, X = _null_data(W, seed=4)
    spec = BasisSpec(p=4)
    Z = build_mc_instruments(X, W, spec)
    fit = fit_2sls(y, X, W, Z)
    blocks = build_blocks(y, X, W, spec)
    d_hat = gradient_dhat(blocks.U, Z, fit.residuals)
    scale = np.max(np.abs(d_hat[:spec.p]))
    assert np.max(np.abs(d_hat[spec.p:])) < 1e-8 * max(scale, 1.0)


def test_partitioned_form_agrees_at_the_estimate():
    W = gen_random_contiguity(300, np.random.default_rng(8))
    y, X = _null_data(W, seed=8)
    result = run_test(y, X, W, spec=BasisSpec(p=4), verify_partitioned=True)
    assert result.quad_form_partitioned == pytest.approx(result.quad_form, rel=1e-8)


def test_partitioned_form_by_hand():
    H = np.array([[2.0, 0.5], [0.5, 1.0]])
    d = np.array([1.0, 0.0])
    # with a zero trailing block both forms are d1^2 / (H11 - H12^2 / H22)
    assert partitioned_quad_form(d, H, n=1, p=1) == pytest.approx(1.0 / 1.75)
    assert quadratic_form(d, H, n=1) == pytest.approx(1.0 / 1.75)


def test_invariant_to_instrument_transforms():
    W = gen_random_contiguity(250, np.random.default_rng(9))
    y, X = _null_data(W, seed=9)
    spec = BasisSpec(p=4)
    Z = build_mc_instruments(X, W, spec).Z
    A = np.random.default_rng(10).normal(size=(Z.shape[1], Z.shape[1])) + 3 * np.eye(Z.shape[1])
    first = run_test(y, X, W, Z, spec)
    second = run_test(y, X, W, Z @ A, spec)
    assert second.quad_form == pytest.approx(first.quad_form, rel=1e-8)
    assert second.t_stat == pytest.approx(first.t_stat, rel=1e-6, abs=1e-8)


def test_end_to_end_result():
    W = gen_circulant(400)
    y, X = _null_data(W, seed=2)
    fit, result = run_test_with_fit(y, X, W)
    assert result.p == choose_p(400) == 7
    assert result.n == 400
    assert np.isfinite(result.t_stat)
    assert result.t_stat == pytest.approx((result.quad_form - 7) / math.sqrt(14))
    assert result.pval_chi2 == pytest.approx(stats.chi2.sf(result.quad_form, 7))
    assert result.cond_M is not None and result.cond_H is not None
    assert abs(fit.lambda_hat - 0.4) < 0.3
    data = json.loads(result.to_json())
    assert data['p'] == 7
    assert "T=" in result.summary()


def test_shared_path_matches_run_test():
    W = gen_circulant(200)
    y, X = _null_data(W, seed=6)
    spec = BasisSpec(p=5)
    Z = build_mc_instruments(X, W, spec)
    fit = fit_2sls(y, X, W, Z)
    direct = linearity_test_from_fit(fit, y, X, W, Z, spec)
    assert direct.quad_form == pytest.approx(run_test(y, X, W, Z, spec).quad_form, rel=1e-10)


def test_small_sample_warns():
    W = gen_circulant(50)
    y, X = _null_data(W, seed=1)
    with pytest.warns(SieveDimensionWarning):
        run_test(y, X, W, spec=BasisSpec(p=4))


def test_instruments_required_for_other_layouts():
    W = gen_circulant(60)
    y, X = _null_data(W)
    with pytest.raises(DimensionError):
        run_test(y, X[:, :2], W, spec=BasisSpec(p=2))
