"""
Hermite sieve: psi_j evaluations and the regressor blocks Upsilon and U

psi_j is the probabilists' Hermite polynomial He_{j + degree_offset}; with the
default offset of 1 the first basis function is quadratic, so no column of
Upsilon duplicates Wy.
"""

from typing import Optional

import numpy as np
from numpy.polynomial import hermite_e

from src.config import NUMERICS_CONFIG
from src.errors import BasisOverflowError
from src.models.estimation import BasisSpec, RegressorBlocks
from src.models.weight_matrix import WeightMatrix
from src.spatial.weights import spatial_lag
from src.utils.validators import InputValidator


def hermite_eval(degree: int, z):
    """He_degree(z) for scalar or array z"""
    if int(degree) != degree or degree < 0:
        raise ValueError(f"degree must be a non-negative integer, got {degree}")
    if degree > NUMERICS_CONFIG['hermite_max_degree']:
        raise ValueError(
            f"degree {degree} above the guard {NUMERICS_CONFIG['hermite_max_degree']}"
        )
    coefficients = np.zeros(int(degree) + 1)
    coefficients[-1] = 1.0
    return hermite_e.hermeval(z, coefficients)


def standardize(z: np.ndarray) -> np.ndarray:
    """(z - mean) / sd, leaving a constant vector centred at zero"""
    z = np.asarray(z, dtype=float)
    sd = z.std(ddof=1) if z.size > 1 else 0.0
    if sd == 0.0:
        return z - z.mean()
    return (z - z.mean()) / sd


def psi(j: int, z, spec: BasisSpec, center: Optional[float] = None,
        scale: Optional[float] = None):
    """
    Evaluate basis function psi_j at z

    When spec.standardize_argument is set, the caller supplies the sample
    center and scale of the argument.
    """
    if int(j) != j or not 1 <= j <= spec.p:
        raise ValueError(f"basis index {j} outside 1..{spec.p}")
    if spec.standardize_argument:
        if center is None or scale is None:
            raise ValueError("standardized basis needs center and scale")
        z = (np.asarray(z, dtype=float) - center) / scale
    return hermite_eval(spec.degree(j), z)


def basis_matrix(z, spec: BasisSpec) -> np.ndarray:
    """n x p matrix with column j equal to psi_j(z)"""
    z = InputValidator.as_vector(z, "basis argument")
    if spec.standardize_argument:
        z = standardize(z)
    vander = hermite_e.hermevander(z, spec.max_degree)
    values = vander[:, spec.degree_offset + 1: spec.max_degree + 1]
    if not np.all(np.isfinite(values)):
        raise BasisOverflowError(
            f"Hermite basis up to degree {spec.max_degree} overflowed; "
            "consider standardize_argument=True"
        )
    return values


def basis_column(j: int, z, spec: BasisSpec) -> np.ndarray:
    """psi_j applied elementwise to a vector, honouring standardization"""
    z = InputValidator.as_vector(z, "basis argument")
    if spec.standardize_argument:
        z = standardize(z)
    values = hermite_eval(spec.degree(j), z)
    if not np.all(np.isfinite(values)):
        raise BasisOverflowError(f"psi_{j} overflowed")
    return values


def build_blocks(y, X, W: WeightMatrix, spec: BasisSpec) -> RegressorBlocks:
    """Upsilon_j(y) = psi_j(Wy) and U = [Upsilon_1 .. Upsilon_p, Wy, X]"""
    y = InputValidator.as_vector(y, "y", W.n)
    X = InputValidator.as_matrix(X, "X", W.n)
    wy = spatial_lag(W, y)
    upsilon = basis_matrix(wy, spec)
    U = np.column_stack([upsilon, wy, X])
    return RegressorBlocks(upsilon=upsilon, U=U, wy=wy)
