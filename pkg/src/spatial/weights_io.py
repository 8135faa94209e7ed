"""
Weight matrix files

Triplet format: a header line "n nnz" followed by one "i j value" row per
nonzero entry, with 1-based indices. Dense format: plain comma separated.
"""

from pathlib import Path
from typing import Union

import numpy as np
from scipy import sparse

from src.errors import DimensionError, SchemaError
from src.models.weight_matrix import DesignTag, Normalization, WeightMatrix

PathLike = Union[str, Path]


def write_triplets(W: WeightMatrix, path: PathLike) -> Path:
    path = Path(path)
    coo = W.values.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, 'w') as f:
        f.write(f"{W.n} {W.nnz}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            f.write(f"{r + 1} {c + 1} {v:.17g}\n")
    return path


def read_triplets(path: PathLike) -> WeightMatrix:
    path = Path(path)
    with open(path) as f:
        header = f.readline().split()
    if len(header) != 2:
        raise SchemaError(f"{path}: header must be 'n nnz', got {' '.join(header)!r}")
    try:
        n, nnz = int(header[0]), int(header[1])
    except ValueError:
        raise SchemaError(f"{path}: header must hold two integers")
    if nnz == 0:
        return WeightMatrix(sparse.csr_matrix((n, n)), Normalization.NONE, DesignTag.CUSTOM)
    rows = np.loadtxt(path, skiprows=1, ndmin=2)
    if rows.shape != (nnz, 3):
        raise SchemaError(f"{path}: expected {nnz} rows of 'i j value', got shape {rows.shape}")
    i = rows[:, 0].astype(int) - 1
    j = rows[:, 1].astype(int) - 1
    if i.min() < 0 or j.min() < 0 or i.max() >= n or j.max() >= n:
        raise DimensionError(f"{path}: index outside 1..{n}")
    values = sparse.csr_matrix((rows[:, 2], (i, j)), shape=(n, n))
    return WeightMatrix(values, Normalization.NONE, DesignTag.CUSTOM)


def write_dense_csv(W: WeightMatrix, path: PathLike) -> Path:
    path = Path(path)
    np.savetxt(path, W.toarray(), delimiter=",", fmt="%.17g")
    return path


def read_dense_csv(path: PathLike) -> WeightMatrix:
    values = np.loadtxt(path, delimiter=",", ndmin=2)
    return WeightMatrix(values, Normalization.NONE, DesignTag.CUSTOM)


def read_weights(path: PathLike) -> WeightMatrix:
    """Dispatch on extension: .csv is dense, anything else is triplets"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"weight file not found: {path}")
    if path.suffix.lower() == '.csv':
        return read_dense_csv(path)
    return read_triplets(path)


def write_weights(W: WeightMatrix, path: PathLike) -> Path:
    path = Path(path)
    if path.suffix.lower() == '.csv':
        return write_dense_csv(W, path)
    return write_triplets(W, path)
