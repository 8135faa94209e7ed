"""Instrument matrices for the simulation design and the tax application"""

import logging
from typing import List, Optional

import numpy as np

from src.config import NUMERICS_CONFIG
from src.errors import DimensionError, InstrumentRankError
from src.estimation.sieve import basis_column
from src.models.estimation import BasisSpec, InstrumentDiagnostics, InstrumentMatrix
from src.models.weight_matrix import WeightMatrix
from src.spatial.weights import spatial_lag
from src.utils.validators import InputValidator

logger = logging.getLogger(__name__)


def alternation_pattern(p: int, n_covariates: int) -> List[int]:
    """
    Covariate (0-based) fed to each psi_1..psi_p

    Cycles forward then backward over the covariates, so with two of them the
    sequence is 0, 1, 1, 0, 0, 1, 1, 0, ... and each covariate meets both odd
    and even degree polynomials.
    """
    if n_covariates < 1:
        raise ValueError("need at least one covariate to build basis instruments")
    cycle = list(range(n_covariates)) + list(range(n_covariates - 1, -1, -1))
    return [cycle[q % len(cycle)] for q in range(p)]


def validate_instruments(Z: InstrumentMatrix, p: int, k: int,
                         mode: str = "custom") -> InstrumentDiagnostics:
    """Count and rank checks for Z (k counts every regressor column of X)"""
    values = Z.Z
    n = values.shape[0]
    singular = np.linalg.svd(values, compute_uv=False)
    largest = singular[0] if singular.size else 0.0
    smallest = singular[-1] if singular.size else 0.0
    ratio = smallest / largest if largest > 0 else 0.0
    rank_ok = bool(largest > 0 and values.shape[1] <= n
                   and ratio > NUMERICS_CONFIG['rank_tol'])
    # cond(Z'Z/n) is the squared singular value ratio of Z
    condition = (largest / smallest) ** 2 if smallest > 0 else float('inf')
    return InstrumentDiagnostics(
        m=Z.m,
        required=p + k + 1,
        condition_number=float(condition),
        singular_ratio=float(ratio),
        rank_ok=rank_ok,
        count_ok=Z.m >= p + k + 1,
        mode=mode,
    )


def require_admissible(Z: InstrumentMatrix, p: int, k: int,
                       mode: str = "custom") -> InstrumentDiagnostics:
    """validate_instruments, raising InstrumentRankError on failure"""
    diagnostics = validate_instruments(Z, p, k, mode)
    if not diagnostics.count_ok:
        raise InstrumentRankError(
            f"{diagnostics.m} instruments but at least p+k+1={diagnostics.required} are needed"
        )
    if not diagnostics.rank_ok:
        raise InstrumentRankError(
            f"instrument matrix is rank deficient (singular value ratio "
            f"{diagnostics.singular_ratio:.3e})"
        )
    return diagnostics


def build_mc_instruments(X, W: WeightMatrix, spec: BasisSpec) -> InstrumentMatrix:
    """
    Rows (1, x2, x3, w'x2, w'x3, psi_1(w'x_l1), ..., psi_p(w'x_lp))

    m = p + 5, one more than the p + k + 1 minimum.
    """
    X = InputValidator.as_matrix(X, "X", W.n, 3)
    if not np.allclose(X[:, 0], 1.0):
        raise DimensionError("first column of X must be the intercept")
    wx = np.column_stack([spatial_lag(W, X[:, 1]), spatial_lag(W, X[:, 2])])
    names = ["x2", "x3"]
    columns = [X[:, 0], X[:, 1], X[:, 2], wx[:, 0], wx[:, 1]]
    labels = ["const", "x2", "x3", "W x2", "W x3"]
    for j, source in enumerate(alternation_pattern(spec.p, 2), start=1):
        columns.append(basis_column(j, wx[:, source], spec))
        labels.append(f"psi_{j}(W {names[source]})")
    Z = InstrumentMatrix(np.column_stack(columns), labels)
    require_admissible(Z, spec.p, 3, mode="simulation")
    return Z


def build_empirical_instruments(dX, P, M, W: WeightMatrix, spec: BasisSpec,
                                covariate_names: Optional[List[str]] = None,
                                policy_lags: bool = True,
                                basis_instruments: bool = True) -> InstrumentMatrix:
    """
    Instruments for the tax application

    Columns: intercept, dX, P, M, then W*P and W*M (policy instruments, when
    policy_lags), W*dX (spatial instruments) and, when basis_instruments,
    psi_q of the W*dX columns in the alternating order. The regressors of the
    structural equation are (1, dX, P, M), so k = dX columns + 3.
    """
    dX = InputValidator.as_matrix(dX, "dX", W.n)
    P = InputValidator.as_vector(P, "P", W.n)
    M = InputValidator.as_vector(M, "M", W.n)
    n_cov = dX.shape[1]
    names = covariate_names or [f"x{j + 1}" for j in range(n_cov)]
    if len(names) != n_cov:
        raise DimensionError(f"{len(names)} names for {n_cov} covariates")

    wdx = np.column_stack([spatial_lag(W, dX[:, j]) for j in range(n_cov)])
    columns = [np.ones(W.n)] + [dX[:, j] for j in range(n_cov)] + [P, M]
    labels = ["const"] + names + ["P", "M"]
    if policy_lags:
        columns += [spatial_lag(W, P), spatial_lag(W, M)]
        labels += ["W P", "W M"]
    columns += [wdx[:, j] for j in range(n_cov)]
    labels += [f"W {name}" for name in names]
    if basis_instruments:
        for q, source in enumerate(alternation_pattern(spec.p, n_cov), start=1):
            columns.append(basis_column(q, wdx[:, source], spec))
            labels.append(f"psi_{q}(W {names[source]})")

    mode = "spatial+basis" if basis_instruments else "spatial"
    if policy_lags:
        mode = "policy+" + mode
    Z = InstrumentMatrix(np.column_stack(columns), labels)
    diagnostics = require_admissible(Z, spec.p, n_cov + 3, mode=mode)
    logger.debug("empirical instruments: %s", diagnostics.to_dict())
    return Z
