"""
Two-stage least squares for the linear SAR model y = lambda Wy + X beta + eps

The projection onto the instrument space always goes through a thin QR
factorization of Z; P_Z is never formed.
"""

import logging
import warnings
from typing import Optional

import numpy as np
from scipy import linalg

from src.config import NUMERICS_CONFIG
from src.errors import (
    DimensionError, InstrumentRankError, SingularSystemError, StabilityWarning,
)
from src.models.estimation import InstrumentMatrix, Sar2slsFit
from src.models.weight_matrix import WeightMatrix
from src.spatial.weights import spatial_lag
from src.utils.validators import InputValidator

logger = logging.getLogger(__name__)


class ZProjection:
    """Orthonormal basis Q of col(Z), so that P_Z a = Q (Q'a)"""

    def __init__(self, Z):
        values = Z.Z if isinstance(Z, InstrumentMatrix) else np.asarray(Z, dtype=float)
        n, m = values.shape
        if m > n:
            raise InstrumentRankError(f"{m} instruments for only {n} observations")
        Q, R = linalg.qr(values, mode='economic')
        diag = np.abs(np.diag(R))
        if diag.size == 0 or diag.min() <= NUMERICS_CONFIG['rank_tol'] * diag.max():
            raise InstrumentRankError("instrument matrix is rank deficient")
        self.Q = Q
        self.n = n
        self.m = m

    def coords(self, A) -> np.ndarray:
        """Q'A"""
        return self.Q.T @ A

    def project(self, A) -> np.ndarray:
        """P_Z A"""
        return self.Q @ self.coords(A)


def _iv_solve(projection: ZProjection, regressors: np.ndarray, y: np.ndarray):
    """theta, residuals and HC0 covariance of the IV regression of y on regressors"""
    A = projection.coords(regressors)
    QA, RA = linalg.qr(A, mode='economic')
    diag = np.abs(np.diag(RA))
    if diag.size == 0 or diag.min() <= 1e-12 * diag.max():
        raise SingularSystemError(
            "XX' P_Z XX is singular: instruments are weak or rank deficient"
        )
    theta = linalg.solve_triangular(RA, QA.T @ projection.coords(y))
    residuals = y - regressors @ theta

    # (Xh'Xh)^{-1} = RA^{-1} RA^{-T}
    RA_inv = linalg.solve_triangular(RA, np.eye(RA.shape[0]))
    bread = RA_inv @ RA_inv.T
    scored = projection.project(regressors) * residuals[:, None]
    covariance = bread @ (scored.T @ scored) @ bread
    return theta, residuals, 0.5 * (covariance + covariance.T)


def fit_2sls(y, X, W: WeightMatrix, Z,
             projection: Optional[ZProjection] = None) -> Sar2slsFit:
    """
    theta-hat = (XX' P_Z XX)^{-1} XX' P_Z y with XX = (Wy, X)

    Robust covariance is the HC0 sandwich
    (Xh'Xh)^{-1} Xh' diag(eps^2) Xh (Xh'Xh)^{-1}, Xh = P_Z XX.
    An all-zero W leaves lambda unidentified; it is then fixed at 0 and beta
    is the IV (or OLS, when Z = X) fit of y on X.
    """
    n = W.n
    y = InputValidator.as_vector(y, "y", n)
    X = InputValidator.as_matrix(X, "X", n)
    instruments = Z if isinstance(Z, InstrumentMatrix) else InstrumentMatrix.from_array(Z)
    if instruments.n != n:
        raise DimensionError(f"Z has {instruments.n} rows, expected {n}")
    wy = spatial_lag(W, y)

    if W.is_empty:
        logger.warning("zero weight matrix: fitting beta only, lambda fixed at 0")
        projection = projection or ZProjection(instruments)
        beta, residuals, cov_beta = _iv_solve(projection, X, y)
        k = X.shape[1]
        covariance = np.zeros((k + 1, k + 1))
        covariance[1:, 1:] = cov_beta
        return Sar2slsFit(theta_hat=np.concatenate([[0.0], beta]), residuals=residuals,
                          covariance=covariance, wy=wy)

    if instruments.m < X.shape[1] + 1:
        raise InstrumentRankError(
            f"{instruments.m} instruments cannot identify {X.shape[1] + 1} parameters"
        )
    projection = projection or ZProjection(instruments)
    theta, residuals, covariance = _iv_solve(projection, np.column_stack([wy, X]), y)

    fit = Sar2slsFit(theta_hat=theta, residuals=residuals, covariance=covariance, wy=wy)
    if abs(fit.lambda_hat) * W.spectral_norm >= 1.0:
        warnings.warn(
            f"|lambda_hat| * ||W|| = {abs(fit.lambda_hat) * W.spectral_norm:.3f} >= 1; "
            "(I - lambda W) may not be invertible at the estimate",
            StabilityWarning,
        )
    return fit


def residual_variance_matrix(fit: Sar2slsFit) -> np.ndarray:
    """Diagonal of Sigma-hat: squared residuals"""
    return fit.residuals ** 2
