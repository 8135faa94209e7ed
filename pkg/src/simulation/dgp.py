"""
Data generating processes for the linear SAR null and the nonlinear lattice
alternatives, plus CSV bundles for sharing generated datasets
"""

import logging
import math
import warnings
from pathlib import Path
from typing import Callable, Dict, Optional, Union

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse import linalg as splinalg

from src.errors import DimensionError, IsolatedUnitError, SchemaError, SingularSystemError, StabilityWarning
from src.models.simulation import DgpConfig, ErrorFamily, HeteroScheme, Link, SarDataset
from src.models.weight_matrix import WeightMatrix
from src.spatial.weights import degrees
from src.spatial.weights_io import read_triplets, write_triplets
from src.utils.validators import InputValidator

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

T_DEGREES_OF_FREEDOM = 5

LINK_FUNCTIONS: Dict[Link, Callable[[float], float]] = {
    Link.ARCTAN: math.atan,
    Link.LOG_QUADRATIC: lambda s: math.log1p(0.25 * s * s),
}


def gen_X(n: int, rng: np.random.Generator) -> np.ndarray:
    """Columns: intercept, U[-2, 2], U[-2.5, 2.5]"""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    return np.column_stack([
        np.ones(n),
        rng.uniform(-2.0, 2.0, n),
        rng.uniform(-2.5, 2.5, n),
    ])


def gen_sigma(scheme: HeteroScheme, W: Optional[WeightMatrix] = None,
              X: Optional[np.ndarray] = None,
              rng: Optional[np.random.Generator] = None,
              n: Optional[int] = None,
              allow_isolated: bool = False) -> np.ndarray:
    """
    Error scales sigma_i for one of the three schemes

    a) neighbour count over its sample mean
    b) sqrt of chi2(2) draws
    c) sqrt(x2^2 + x3^2) / 2

    Scheme a) rejects units without neighbours unless allow_isolated is set,
    in which case those units get sigma = 0.
    """
    if scheme is HeteroScheme.A_DEGREE:
        if W is None:
            raise ValueError("scheme a) needs the weight matrix")
        d = degrees(W).astype(float)
        mean_degree = d.sum() / W.n
        if mean_degree == 0:
            raise IsolatedUnitError("scheme a) needs at least one neighbour pair")
        isolated = np.flatnonzero(d == 0)
        if isolated.size and not allow_isolated:
            raise IsolatedUnitError(
                f"{isolated.size} unit(s) without neighbours (first: {isolated[0]}); "
                "scheme a) would give them zero variance"
            )
        return d / mean_degree

    if scheme is HeteroScheme.B_CHISQ2:
        if rng is None:
            raise ValueError("scheme b) needs a random stream")
        size = n if n is not None else (W.n if W is not None else None)
        if size is None:
            raise ValueError("scheme b) needs n")
        return np.sqrt(rng.chisquare(2, int(size)))

    if scheme is HeteroScheme.C_CONDITIONAL:
        if X is None:
            raise ValueError("scheme c) needs the covariates")
        X = InputValidator.as_matrix(X, "X")
        if X.shape[1] < 3:
            raise DimensionError("scheme c) uses columns 2 and 3 of X")
        return np.sqrt(X[:, 1] ** 2 + X[:, 2] ** 2) / 2.0

    raise ValueError(f"unknown scheme {scheme!r}")


def gen_errors(family: ErrorFamily, sigma, rng: np.random.Generator) -> np.ndarray:
    """eps_i = sigma_i * zeta_i; t5 draws are not rescaled to unit variance"""
    sigma = InputValidator.as_vector(sigma, "sigma")
    if np.any(sigma < 0) or not np.any(sigma > 0):
        raise ValueError("sigma must be non-negative and not identically zero")
    n = sigma.shape[0]
    if family is ErrorFamily.GAUSSIAN:
        zeta = rng.standard_normal(n)
    elif family is ErrorFamily.STUDENT_T5:
        zeta = rng.standard_t(T_DEGREES_OF_FREEDOM, n)
    else:
        raise ValueError(f"unknown error family {family!r}")
    return sigma * zeta


class NullSolver:
    """Sparse LU of (I - lambda0 W), factorized once and reused per replication"""

    def __init__(self, W: WeightMatrix, lambda0: float):
        self.n = W.n
        self.lambda0 = float(lambda0)
        if W.nnz and abs(self.lambda0) * W.spectral_norm >= 1.0:
            warnings.warn(
                f"|lambda0| * ||W|| = {abs(self.lambda0) * W.spectral_norm:.3f} >= 1",
                StabilityWarning,
            )
        system = (sparse.identity(self.n, format='csc')
                  - self.lambda0 * W.values.tocsc()).tocsc()
        try:
            self._lu = splinalg.splu(system)
        except RuntimeError as e:
            raise SingularSystemError(f"(I - lambda0 W) is singular: {e}")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        y = self._lu.solve(np.asarray(rhs, dtype=float))
        if not np.all(np.isfinite(y)):
            raise SingularSystemError("(I - lambda0 W) solve produced non-finite values")
        return y


def gen_null_y(X, W: WeightMatrix, beta0, lambda0: float, eps,
               solver: Optional[NullSolver] = None) -> np.ndarray:
    """Solve (I - lambda0 W) y = X beta0 + eps"""
    X = InputValidator.as_matrix(X, "X", W.n)
    beta0 = InputValidator.as_vector(beta0, "beta0", X.shape[1])
    eps = InputValidator.as_vector(eps, "eps", W.n)
    rhs = X @ beta0 + eps
    if lambda0 == 0 or W.is_empty:
        return rhs
    solver = solver or NullSolver(W, lambda0)
    if solver.n != W.n or solver.lambda0 != float(lambda0):
        raise ValueError("solver was factorized for a different system")
    return solver.solve(rhs)


def gen_lattice_nonlinear_y(config: DgpConfig, X, eps) -> np.ndarray:
    """
    y_{k,j} = g(y_{k-1,j} + y_{k,j-1}) + x_{k,j}' beta + eps_{k,j}

    Filled in row-major order with a zero boundary; position m2(k-1) + j - 1
    matches the lattice weight matrix.
    """
    if config.lattice is None or not config.link.is_nonlinear:
        raise ValueError("nonlinear generation needs lattice dimensions and a nonlinear link")
    m1, m2 = config.lattice
    n = m1 * m2
    X = InputValidator.as_matrix(X, "X", n, len(config.beta0))
    eps = InputValidator.as_vector(eps, "eps", n)
    shock = X @ config.beta + eps
    link = LINK_FUNCTIONS[config.link]

    # padded grid: row 0 and column 0 hold the zero boundary
    grid = np.zeros((m1 + 1, m2 + 1))
    for k in range(1, m1 + 1):
        for j in range(1, m2 + 1):
            grid[k, j] = link(grid[k - 1, j] + grid[k, j - 1]) + shock[m2 * (k - 1) + j - 1]
    return grid[1:, 1:].reshape(-1)


def simulate_dataset(config: DgpConfig, W: WeightMatrix, rng: np.random.Generator,
                     sigma: Optional[np.ndarray] = None,
                     solver: Optional[NullSolver] = None,
                     allow_isolated: bool = False) -> SarDataset:
    """
    One draw of (X, sigma, eps, y) for a cell

    A fixed sigma (scheme a or b) may be passed in; scheme c) always
    recomputes it from the freshly drawn X.
    """
    if W.n != config.n:
        raise DimensionError(f"W has n={W.n} but the configuration has n={config.n}")
    X = gen_X(config.n, rng)
    if config.hetero_scheme is HeteroScheme.C_CONDITIONAL:
        sigma = gen_sigma(config.hetero_scheme, X=X)
    elif sigma is None:
        sigma = gen_sigma(config.hetero_scheme, W, X, rng, allow_isolated=allow_isolated)
    eps = gen_errors(config.error_family, sigma, rng)
    if config.link.is_nonlinear:
        y = gen_lattice_nonlinear_y(config, X, eps)
    else:
        y = gen_null_y(X, W, config.beta, config.lambda0, eps, solver)
    return SarDataset(y=y, X=X, W=W, sigma=sigma)


def write_dataset(dataset: SarDataset, directory: PathLike) -> Path:
    """Write y.csv, X.csv, W.txt (triplets) and, when known, sigma.csv"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({'y': dataset.y}).to_csv(directory / 'y.csv', index=False, float_format='%.17g')
    columns = [f"x{j + 1}" for j in range(dataset.X.shape[1])]
    pd.DataFrame(dataset.X, columns=columns).to_csv(
        directory / 'X.csv', index=False, float_format='%.17g')
    write_triplets(dataset.W, directory / 'W.txt')
    if dataset.sigma is not None:
        pd.DataFrame({'sigma': dataset.sigma}).to_csv(
            directory / 'sigma.csv', index=False, float_format='%.17g')
    logger.info("wrote dataset bundle with n=%d to %s", dataset.n, directory)
    return directory


def read_numeric_csv(path: PathLike) -> np.ndarray:
    """
    Numeric CSV as a 2-d array; a leading header row is skipped when present
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"{path} does not exist")
    frame = pd.read_csv(path, header=None)
    numeric = frame.apply(pd.to_numeric, errors='coerce')
    if len(numeric) and numeric.iloc[0].isna().all():
        numeric = numeric.iloc[1:]
    if numeric.empty or numeric.isna().any().any():
        raise SchemaError(f"{path}: expected a purely numeric table")
    return numeric.to_numpy(dtype=float)


def read_dataset(directory: PathLike) -> SarDataset:
    directory = Path(directory)
    y = InputValidator.as_vector(read_numeric_csv(directory / 'y.csv'), "y")
    X = read_numeric_csv(directory / 'X.csv')
    W = read_triplets(directory / 'W.txt')
    sigma_path = directory / 'sigma.csv'
    sigma = InputValidator.as_vector(read_numeric_csv(sigma_path), "sigma") if sigma_path.exists() else None
    return SarDataset(y=y, X=X, W=W, sigma=sigma)
