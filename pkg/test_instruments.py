#!/usr/bin/env python3
"""
Tests for instrument construction and admissibility checks
"""

import numpy as np
import pytest

from src.errors import DimensionError, InstrumentRankError
from src.estimation.instruments import (
    alternation_pattern, build_empirical_instruments, build_mc_instruments,
    require_admissible, validate_instruments,
)
from src.estimation.sieve import basis_column
from src.models.estimation import BasisSpec, InstrumentMatrix
from src.spatial.weights import gen_circulant, gen_random_contiguity, spatial_lag


@pytest.fixture
def design():
    rng = np.random.default_rng(7)
    W = gen_circulant(60)
    X = np.column_stack([np.ones(60), rng.normal(size=60), rng.normal(size=60)])
    return W, X


def test_alternation_pattern():
    assert alternation_pattern(6, 2) == [0, 1, 1, 0, 0, 1]
    assert alternation_pattern(5, 3) == [0, 1, 2, 2, 1]
    assert alternation_pattern(3, 1) == [0, 0, 0]
    with pytest.raises(ValueError):
        alternation_pattern(2, 0)


def test_mc_instruments_layout(design):
    W, X = design
    spec = BasisSpec(p=4)
    Z = build_mc_instruments(X, W, spec)
    assert Z.m == spec.p + 5
    assert Z.column_labels[:5] == ["const", "x2", "x3", "W x2", "W x3"]
    assert Z.column_labels[5:] == [
        "psi_1(W x2)", "psi_2(W x3)", "psi_3(W x3)", "psi_4(W x2)",
    ]
    wx3 = spatial_lag(W, X[:, 2])
    assert Z.Z[:, 6] == pytest.approx(basis_column(2, wx3, spec))


def test_mc_instruments_need_intercept(design):
    W, X = design
    with pytest.raises(DimensionError):
        build_mc_instruments(X[:, [1, 0, 2]], W, BasisSpec(p=2))


def test_count_failure(design):
    W, X = design
    Z = InstrumentMatrix.from_array(X)
    diagnostics = validate_instruments(Z, p=2, k=3)
    assert diagnostics.required == 6
    assert not diagnostics.count_ok
    assert not diagnostics.passed
    with pytest.raises(InstrumentRankError):
        require_admissible(Z, p=2, k=3)


def test_rank_failure(design):
    W, X = design
    Z = InstrumentMatrix.from_array(np.column_stack([X, X, X[:, 1] + X[:, 2]]))
    diagnostics = validate_instruments(Z, p=1, k=3)
    assert diagnostics.count_ok
    assert not diagnostics.rank_ok
    with pytest.raises(InstrumentRankError):
        require_admissible(Z, p=1, k=3)


def test_instrument_matrix_labels():
    Z = InstrumentMatrix.from_array(np.ones((4, 2)))
    assert Z.column_labels == ["z1", "z2"]
    with pytest.raises(DimensionError):
        InstrumentMatrix(np.ones((4, 2)), ["only one"])


def test_empirical_instrument_modes():
    rng = np.random.default_rng(1)
    n = 80
    W = gen_random_contiguity(n, rng)
    dX = rng.normal(size=(n, 6))
    P = (rng.uniform(size=n) < 0.3).astype(float)
    M = P * rng.uniform(0.1, 1.0, size=n)
    spec = BasisSpec(p=4)

    full = build_empirical_instruments(dX, P, M, W, spec)
    assert full.m == 1 + 6 + 2 + 2 + 6 + 4
    assert "W P" in full.column_labels and "W M" in full.column_labels

    no_policy = build_empirical_instruments(dX, P, M, W, spec, policy_lags=False)
    assert no_policy.m == full.m - 2

    spatial_only = build_empirical_instruments(dX, P, M, W, spec, policy_lags=False,
                                               basis_instruments=False)
    assert spatial_only.m == 1 + 6 + 2 + 6

    with pytest.raises(DimensionError):
        build_empirical_instruments(dX, P, M, W, spec, covariate_names=["a", "b"])
