"""
Spatial weight matrix designs, normalizations and queries

Every generator takes an explicit numpy Generator so that a given seed
always reproduces the same matrix.
"""

import logging
import math
import warnings
from typing import Optional, Tuple

import numpy as np
from scipy import sparse, stats
from scipy.sparse import linalg as splinalg

from src.config import NUMERICS_CONFIG
from src.errors import DimensionError, SingularSystemError, StabilityWarning
from src.models.weight_matrix import DesignTag, Normalization, WeightMatrix
from src.utils.validators import InputValidator

logger = logging.getLogger(__name__)


def _require_n(n: int, minimum: int) -> int:
    if int(n) != n or n < minimum:
        raise ValueError(f"n must be an integer >= {minimum}, got {n}")
    return int(n)


def _power_iteration_norm(values: sparse.csr_matrix) -> Optional[float]:
    """
    sqrt of the top eigenvalue of W'W, or None when not converged

    Stops on the eigen-residual |W'W x - mu x| <= sqrt(tol) mu; for a
    symmetric matrix the eigenvalue error is then of order tol mu over the
    relative spectral gap.
    """
    tol = math.sqrt(NUMERICS_CONFIG['spectral_tol'])
    n = values.shape[0]
    x = np.full(n, 1.0 / math.sqrt(n))
    wt = values.T.tocsr()
    for _ in range(NUMERICS_CONFIG['spectral_max_iter']):
        y = wt @ (values @ x)
        estimate = float(x @ y)  # Rayleigh quotient of W'W
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            return 0.0
        if np.linalg.norm(y - estimate * x) <= tol * estimate:
            return math.sqrt(estimate)
        x = y / norm_y
    return None


def _lanczos_norm(values: sparse.csr_matrix) -> float:
    return float(splinalg.svds(values, k=1, v0=np.ones(values.shape[0]),
                               return_singular_vectors=False)[0])


def spectral_norm(W: WeightMatrix) -> float:
    """
    Largest singular value of W

    Dense SVD for small n. Larger matrices use power iteration on W'W,
    except the lattice design: its top singular values cluster within
    O(1/n) of each other, so it goes straight to Lanczos (svds).
    """
    values = W.values
    if values.nnz == 0:
        return 0.0
    if W.n < NUMERICS_CONFIG['dense_svd_below']:
        return float(np.linalg.norm(values.toarray(), 2))
    if W.design_tag is DesignTag.LATTICE:
        return _lanczos_norm(values)
    estimate = _power_iteration_norm(values)
    if estimate is None:
        warnings.warn(
            "power iteration for the spectral norm did not converge; using sparse SVD",
            StabilityWarning,
        )
        estimate = _lanczos_norm(values)
    return estimate


def spectral_normalize(W: WeightMatrix) -> WeightMatrix:
    """W / ||W||_2"""
    norm = spectral_norm(W)
    if norm == 0.0:
        raise SingularSystemError("cannot spectrally normalize a zero weight matrix")
    return WeightMatrix(W.values / norm, Normalization.SPECTRAL, W.design_tag)


def row_normalize(W: WeightMatrix) -> WeightMatrix:
    """Divide every nonzero row by its sum; zero rows stay zero"""
    sums = np.asarray(W.values.sum(axis=1)).ravel()
    scale = np.zeros_like(sums)
    nonzero = sums != 0
    scale[nonzero] = 1.0 / sums[nonzero]
    return WeightMatrix(sparse.diags(scale) @ W.values, Normalization.ROW, W.design_tag)


def degrees(W: WeightMatrix) -> np.ndarray:
    """Number of nonzero off-diagonal entries in every row"""
    return np.diff(W.values.indptr).astype(int)


def degree(W: WeightMatrix, i: int) -> int:
    """Number of neighbours of unit i (0-based)"""
    InputValidator.check_index(i, W.n)
    return int(degrees(W)[i])


def spatial_lag(W: WeightMatrix, v) -> np.ndarray:
    """Wv"""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != W.n:
        raise DimensionError(f"vector of length {v.shape[0]} does not match W with n={W.n}")
    return np.asarray(W.values @ v)


def exponential_from_locations(locations) -> WeightMatrix:
    """
    Exponential distance weights exp(-|l_i - l_j|) 1(|l_i - l_j| < log n)

    Returns the unnormalized all-zero matrix when no pair is close enough,
    otherwise the spectrally normalized matrix.
    """
    loc = InputValidator.as_vector(locations, "locations")
    n = loc.shape[0]
    dist = np.abs(loc[:, None] - loc[None, :])
    values = np.exp(-dist) * (dist < math.log(n))
    np.fill_diagonal(values, 0.0)
    W = WeightMatrix(values, Normalization.NONE, DesignTag.EXPONENTIAL)
    if W.is_empty:
        logger.warning("exponential design produced no links for n=%d", n)
        return W
    return spectral_normalize(W)


def gen_exponential(n: int, rng: np.random.Generator) -> WeightMatrix:
    """Design 1: locations i.i.d. U[0, n]"""
    n = _require_n(n, 2)
    return exponential_from_locations(rng.uniform(0.0, n, size=n))


def cutoff_from_draws(d, c) -> WeightMatrix:
    """
    Cutoff weights Phi(-d_ij) 1(c_ij < n^{-2/3}) scaled to norm 1/1.1

    d and c are n x n arrays of draws; their diagonals are ignored.
    Returns the unscaled all-zero matrix when every indicator fails.
    """
    d = np.asarray(d, dtype=float)
    c = np.asarray(c, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1] or c.shape != d.shape:
        raise DimensionError(f"draw arrays must be square and equal, got {d.shape} and {c.shape}")
    n = d.shape[0]
    values = stats.norm.cdf(-d) * (c < n ** (-2.0 / 3.0))
    np.fill_diagonal(values, 0.0)
    W = WeightMatrix(values, Normalization.NONE, DesignTag.CUTOFF)
    if W.is_empty:
        logger.warning("cutoff design produced no links for n=%d", n)
        return W
    norm = spectral_norm(W)
    return WeightMatrix(W.values / (1.1 * norm), Normalization.CUTOFF_SCALED, DesignTag.CUTOFF)


def gen_cutoff(n: int, rng: np.random.Generator) -> WeightMatrix:
    """Design 2: d_ij ~ U[-3, 3], c_ij ~ U[0, 1] per ordered pair"""
    n = _require_n(n, 2)
    d = rng.uniform(-3.0, 3.0, size=(n, n))
    c = rng.uniform(0.0, 1.0, size=(n, n))
    return cutoff_from_draws(d, c)


def gen_circulant(n: int) -> WeightMatrix:
    """Design 3: W[i, i-1] = W[i, i+1] = 0.5 with wraparound"""
    n = _require_n(n, 3)
    rows = np.repeat(np.arange(n), 2)
    cols = np.empty(2 * n, dtype=int)
    cols[0::2] = (np.arange(n) - 1) % n
    cols[1::2] = (np.arange(n) + 1) % n
    values = sparse.csr_matrix((np.full(2 * n, 0.5), (rows, cols)), shape=(n, n))
    return spectral_normalize(WeightMatrix(values, Normalization.NONE, DesignTag.CIRCULANT))


def contiguity_pair_count(n: int) -> int:
    """Unordered pairs needed for int(2 n^{6/5}) ones"""
    return int(math.floor(n ** 1.2))


def gen_random_contiguity(n: int, rng: np.random.Generator) -> WeightMatrix:
    """Design 4: symmetric 0/1 matrix with about 2 n^{6/5} ones"""
    n = _require_n(n, 2)
    pairs = contiguity_pair_count(n)
    capacity = n * (n - 1) // 2
    if pairs > capacity:
        raise ValueError(
            f"n={n} cannot hold {2 * pairs} ones in a symmetric zero-diagonal matrix"
        )
    upper_rows, upper_cols = np.triu_indices(n, k=1)
    chosen = rng.choice(capacity, size=pairs, replace=False)
    rows = np.concatenate([upper_rows[chosen], upper_cols[chosen]])
    cols = np.concatenate([upper_cols[chosen], upper_rows[chosen]])
    values = sparse.csr_matrix((np.ones(2 * pairs), (rows, cols)), shape=(n, n))
    return spectral_normalize(
        WeightMatrix(values, Normalization.NONE, DesignTag.RANDOM_CONTIGUITY)
    )


def lattice_index(k: int, j: int, m2: int) -> int:
    """0-based position of lattice cell (k, j), both 1-based"""
    return m2 * (k - 1) + (j - 1)


def gen_lattice(m1: int, m2: int, normalize: bool = True) -> WeightMatrix:
    """Design 5: each cell points at its upper and left neighbours"""
    m1 = _require_n(m1, 2)
    m2 = _require_n(m2, 2)
    n = m1 * m2
    rows, cols = [], []
    for k in range(1, m1 + 1):
        for j in range(1, m2 + 1):
            i = lattice_index(k, j, m2)
            if k >= 2:
                rows.append(i)
                cols.append(i - m2)
            if j >= 2:
                rows.append(i)
                cols.append(i - 1)
    values = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    W = WeightMatrix(values, Normalization.NONE, DesignTag.LATTICE)
    return spectral_normalize(W) if normalize else W


def generate_weights(design: DesignTag, n: Optional[int] = None,
                     lattice: Optional[Tuple[int, int]] = None,
                     rng: Optional[np.random.Generator] = None) -> WeightMatrix:
    """Build any simulation design by tag"""
    if design is DesignTag.LATTICE:
        if lattice is None:
            raise ValueError("lattice design needs (m1, m2)")
        return gen_lattice(*lattice)
    if n is None:
        raise ValueError(f"design '{design.value}' needs n")
    if design is DesignTag.CIRCULANT:
        return gen_circulant(n)
    if rng is None:
        raise ValueError(f"design '{design.value}' is stochastic and needs a random stream")
    if design is DesignTag.EXPONENTIAL:
        return gen_exponential(n, rng)
    if design is DesignTag.CUTOFF:
        return gen_cutoff(n, rng)
    if design is DesignTag.RANDOM_CONTIGUITY:
        return gen_random_contiguity(n, rng)
    raise ValueError(f"design '{design.value}' cannot be generated")
