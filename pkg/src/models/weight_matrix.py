from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict

import numpy as np
from scipy import sparse

from src.errors import DimensionError


class Normalization(Enum):
    """How a weight matrix has been scaled"""
    NONE = "none"
    SPECTRAL = "spectral"
    ROW = "row"
    CUTOFF_SCALED = "cutoff_scaled"


class DesignTag(Enum):
    """Which construction produced a weight matrix"""
    EXPONENTIAL = "exponential"
    CUTOFF = "cutoff"
    CIRCULANT = "circulant"
    RANDOM_CONTIGUITY = "random_contiguity"
    LATTICE = "lattice"
    CUSTOM = "custom"

    @classmethod
    def simulation_designs(cls):
        """Designs the Monte Carlo harness can generate, in table order"""
        return [cls.EXPONENTIAL, cls.CUTOFF, cls.CIRCULANT,
                cls.RANDOM_CONTIGUITY, cls.LATTICE]

    @property
    def is_stochastic(self) -> bool:
        return self in (DesignTag.EXPONENTIAL, DesignTag.CUTOFF,
                        DesignTag.RANDOM_CONTIGUITY)


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """n x n spatial weight matrix with zero diagonal, stored as CSR"""
    values: sparse.csr_matrix = field(repr=False)
    normalization: Normalization = Normalization.NONE
    design_tag: DesignTag = DesignTag.CUSTOM

    def __post_init__(self):
        values = self.values
        if not sparse.issparse(values):
            values = sparse.csr_matrix(np.asarray(values, dtype=float))
        values = sparse.csr_matrix(values, dtype=float, copy=True)
        if values.shape[0] != values.shape[1]:
            raise DimensionError(f"weight matrix must be square, got {values.shape}")
        values.sum_duplicates()
        values.eliminate_zeros()
        if np.any(values.diagonal() != 0):
            raise DimensionError("weight matrix must have a zero diagonal")
        values.data.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def nnz(self) -> int:
        return self.values.nnz

    @property
    def is_empty(self) -> bool:
        """All-zero signal returned by generators whose indicators all failed"""
        return self.values.nnz == 0

    @property
    def is_symmetric(self) -> bool:
        diff = self.values - self.values.T
        return diff.nnz == 0 or np.max(np.abs(diff.data)) == 0.0

    @cached_property
    def spectral_norm(self) -> float:
        """Largest singular value, computed once per matrix"""
        from src.spatial.weights import spectral_norm
        return spectral_norm(self)

    def toarray(self) -> np.ndarray:
        return self.values.toarray()

    def to_dict(self) -> Dict[str, Any]:
        """Summary metadata (the values themselves go through weights_io)"""
        return {
            "n": self.n,
            "nnz": self.nnz,
            "normalization": self.normalization.value,
            "design_tag": self.design_tag.value,
        }
