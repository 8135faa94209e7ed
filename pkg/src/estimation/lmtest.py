"""
Heteroskedasticity-robust LM test of linearity of the spatial interaction

Under the null the model is the linear SAR; the statistic measures how far
the gradient of the 2SLS criterion, extended with the sieve terms
psi_j(Wy), is from zero:

    d   = -(2/n) U' P_Z eps
    H   = 4 J' M^{-1} Omega M^{-1} J,  J = Z'U/n, M = Z'Z/n, Omega = Z' diag(eps^2) Z/n
    T   = (n d' H^{-1} d - p) / sqrt(2p)
"""

import logging
import math
import warnings
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from src.config import DEFAULT_ALPHA, NUMERICS_CONFIG
from src.errors import (
    DimensionError, NotPositiveDefiniteError, SieveDimensionWarning, SingularSystemError,
)
from src.estimation.critical_values import (
    chi2_pvalue, chi2_standardized_critical, choose_p, normal_critical, normal_pvalue,
)
from src.estimation.estimator import ZProjection, fit_2sls
from src.estimation.instruments import build_mc_instruments, require_admissible
from src.estimation.sieve import build_blocks
from src.models.estimation import (
    BasisSpec, InstrumentMatrix, LinearityTestResult, Sar2slsFit,
)
from src.models.weight_matrix import WeightMatrix
from src.utils.validators import InputValidator

logger = logging.getLogger(__name__)


def _instrument_values(Z) -> np.ndarray:
    return Z.Z if isinstance(Z, InstrumentMatrix) else np.asarray(Z, dtype=float)


def gradient_dhat(U, Z, eps_hat, projection: Optional[ZProjection] = None) -> np.ndarray:
    """d-hat = -(2/n) U' P_Z eps-hat"""
    U = np.asarray(U, dtype=float)
    eps_hat = np.asarray(eps_hat, dtype=float)
    Zv = _instrument_values(Z)
    n = U.shape[0]
    if Zv.shape[0] != n or eps_hat.shape != (n,):
        raise DimensionError(
            f"U has {n} rows but Z has {Zv.shape[0]} and eps has {eps_hat.shape}"
        )
    projection = projection or ZProjection(Zv)
    return -(2.0 / n) * (projection.coords(U).T @ projection.coords(eps_hat))


def covariance_Hhat(U, Z, eps_hat) -> np.ndarray:
    """H-hat = 4 J' M^{-1} Omega M^{-1} J, symmetrized"""
    U = np.asarray(U, dtype=float)
    eps_hat = np.asarray(eps_hat, dtype=float)
    Zv = _instrument_values(Z)
    n = U.shape[0]
    if Zv.shape[0] != n or eps_hat.shape != (n,):
        raise DimensionError("U, Z and eps-hat must have the same number of rows")
    J = Zv.T @ U / n
    M = Zv.T @ Zv / n
    scaled = Zv * eps_hat[:, None]
    Omega = scaled.T @ scaled / n
    try:
        M_factor = linalg.cho_factor(M)
    except linalg.LinAlgError:
        raise SingularSystemError("M-hat = Z'Z/n is singular")
    A = linalg.cho_solve(M_factor, J)
    H = 4.0 * A.T @ Omega @ A
    return 0.5 * (H + H.T)


def _factor_H(H: np.ndarray):
    try:
        return linalg.cho_factor(H)
    except linalg.LinAlgError:
        _, D, _ = linalg.ldl(H)
        pivot = float(np.min(np.diag(D)))
        raise NotPositiveDefiniteError(
            f"H-hat is not positive definite (smallest pivot {pivot:.3e}); "
            "U or the instruments are rank deficient",
            pivot=pivot,
        )


def quadratic_form(d_hat, H_hat, n: int) -> float:
    """n d' H^{-1} d by Cholesky solve"""
    d_hat = np.asarray(d_hat, dtype=float)
    H_hat = np.asarray(H_hat, dtype=float)
    if H_hat.shape != (d_hat.shape[0], d_hat.shape[0]):
        raise DimensionError(f"H-hat {H_hat.shape} does not match d-hat {d_hat.shape}")
    factor = _factor_H(H_hat)
    return float(n * d_hat @ linalg.cho_solve(factor, d_hat))


def partitioned_quad_form(d_hat, H_hat, n: int, p: int) -> float:
    """
    n d_p' H^{11} d_p with H^{11} the leading p x p block of H^{-1}

    Agrees with quadratic_form when the trailing (lambda, beta) block of d
    vanishes, as it does at the 2SLS estimate.
    """
    d_hat = np.asarray(d_hat, dtype=float)
    H_hat = np.asarray(H_hat, dtype=float)
    H11, H12 = H_hat[:p, :p], H_hat[:p, p:]
    H22 = H_hat[p:, p:]
    schur = H11 - H12 @ linalg.cho_solve(_factor_H(H22), H12.T)
    schur = 0.5 * (schur + schur.T)
    d_p = d_hat[:p]
    return float(n * d_p @ linalg.cho_solve(_factor_H(schur), d_p))


def statistic(d_hat, H_hat, n: int, p: int, alpha: float = DEFAULT_ALPHA) -> LinearityTestResult:
    """Standardized statistic T with both critical values and p-values"""
    alpha = InputValidator.require_alpha(alpha)
    quad = quadratic_form(d_hat, H_hat, n)
    t_stat = (quad - p) / math.sqrt(2.0 * p)
    crit_normal = normal_critical(alpha)
    crit_chi2 = chi2_standardized_critical(p, alpha)
    return LinearityTestResult(
        p=int(p),
        n=int(n),
        quad_form=quad,
        t_stat=float(t_stat),
        crit_normal=crit_normal,
        crit_chi2_std=crit_chi2,
        pval_normal=normal_pvalue(t_stat),
        pval_chi2=chi2_pvalue(quad, p),
        reject_normal=bool(t_stat > crit_normal),
        reject_chi2=bool(t_stat > crit_chi2),
        alpha=alpha,
    )


def _column_scales(A: np.ndarray) -> np.ndarray:
    scales = np.sqrt(np.mean(A * A, axis=0))
    scales[scales == 0] = 1.0
    return scales


def linearity_test_from_fit(fit: Sar2slsFit, y, X, W: WeightMatrix, Z,
                            spec: BasisSpec, alpha: float = DEFAULT_ALPHA,
                            verify_partitioned: bool = False) -> LinearityTestResult:
    """
    The test given a null fit; the one path shared by run_test, the Monte
    Carlo harness and the tax application.

    Columns of U and Z are rescaled to unit RMS before forming d and H. The
    quadratic form is invariant to that rescaling, while H stays well
    conditioned when high-degree Hermite columns are large.
    """
    Zv = _instrument_values(Z)
    blocks = build_blocks(y, X, W, spec)
    n = W.n
    U = blocks.U / _column_scales(blocks.U)
    Zs = Zv / _column_scales(Zv)
    projection = ZProjection(Zs)

    d_hat = gradient_dhat(U, Zs, fit.residuals, projection)
    H_hat = covariance_Hhat(U, Zs, fit.residuals)
    result = statistic(d_hat, H_hat, n, spec.p, alpha)

    M = Zs.T @ Zs / n
    extras = {
        'cond_M': float(np.linalg.cond(M)),
        'cond_H': float(np.linalg.cond(H_hat)),
    }
    if verify_partitioned:
        partitioned = partitioned_quad_form(d_hat, H_hat, n, spec.p)
        extras['quad_form_partitioned'] = partitioned
        gap = abs(partitioned - result.quad_form) / max(abs(result.quad_form), 1e-300)
        if gap > 1e-6:
            logger.warning("full and partitioned quadratic forms differ by %.2e (relative)", gap)
    return LinearityTestResult(**{**result.to_dict(), **extras})


def default_instruments(X, W: WeightMatrix, spec: BasisSpec) -> InstrumentMatrix:
    """Simulation-design instruments when X is (1, x2, x3)"""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[1] == 3 and np.allclose(X[:, 0], 1.0):
        return build_mc_instruments(X, W, spec)
    raise DimensionError(
        "instruments must be supplied unless X has the (1, x2, x3) simulation layout"
    )


def run_test_with_fit(y, X, W: WeightMatrix, Z=None, spec: Optional[BasisSpec] = None,
                      alpha: float = DEFAULT_ALPHA,
                      verify_partitioned: bool = False) -> Tuple[Sar2slsFit, LinearityTestResult]:
    """Fit the linear SAR by 2SLS and test linearity of the spatial interaction"""
    n = W.n
    y = InputValidator.as_vector(y, "y", n)
    X = InputValidator.as_matrix(X, "X", n)
    spec = spec or BasisSpec(p=choose_p(n))
    if spec.p ** 3 / n > NUMERICS_CONFIG['rate_warning_threshold']:
        warnings.warn(
            f"p^3/n = {spec.p ** 3 / n:.2f}: the normal approximation needs p^3/n small",
            SieveDimensionWarning,
        )
    if Z is None:
        Z = default_instruments(X, W, spec)
    elif not isinstance(Z, InstrumentMatrix):
        Z = InstrumentMatrix.from_array(Z)
    if Z.n != n:
        raise DimensionError(f"Z has {Z.n} rows, expected {n}")
    require_admissible(Z, spec.p, X.shape[1])

    projection = ZProjection(Z)
    fit = fit_2sls(y, X, W, Z, projection)
    result = linearity_test_from_fit(fit, y, X, W, Z, spec, alpha,
                                     verify_partitioned=verify_partitioned)
    return fit, result


def run_test(y, X, W: WeightMatrix, Z=None, spec: Optional[BasisSpec] = None,
             alpha: float = DEFAULT_ALPHA,
             verify_partitioned: bool = False) -> LinearityTestResult:
    """End-to-end test; see run_test_with_fit"""
    return run_test_with_fit(y, X, W, Z, spec, alpha, verify_partitioned)[1]
