from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.config import DGP_DEFAULTS, MC_DEFAULTS, MASTER_SEED, WORKERS
from src.models.estimation import InstrumentMatrix
from src.models.weight_matrix import DesignTag, WeightMatrix


class ErrorFamily(Enum):
    """Distribution of the standardized shocks zeta_i"""
    GAUSSIAN = "gaussian"
    STUDENT_T5 = "student_t5"


class HeteroScheme(Enum):
    """Scale mechanisms for sigma_i"""
    A_DEGREE = "a_degree"
    B_CHISQ2 = "b_chisq2"
    C_CONDITIONAL = "c_conditional"

    @property
    def label(self) -> str:
        return self.value[0] + ")"


class Link(Enum):
    """Transmission of the spatial lag into the outcome"""
    NULL_LINEAR = "null_linear"
    ARCTAN = "arctan"
    LOG_QUADRATIC = "log_quadratic"

    @property
    def is_nonlinear(self) -> bool:
        return self is not Link.NULL_LINEAR


@dataclass(frozen=True)
class DgpConfig:
    """Data generating process settings for one experiment cell"""
    lambda0: float = DGP_DEFAULTS['lambda0']
    beta0: Tuple[float, ...] = DGP_DEFAULTS['beta0']
    error_family: ErrorFamily = ErrorFamily.GAUSSIAN
    hetero_scheme: HeteroScheme = HeteroScheme.A_DEGREE
    link: Link = Link.NULL_LINEAR
    n: Optional[int] = None
    lattice: Optional[Tuple[int, int]] = None
    seed: int = MASTER_SEED

    def __post_init__(self):
        object.__setattr__(self, 'beta0', tuple(float(b) for b in self.beta0))
        if self.lattice is not None:
            m1, m2 = (int(v) for v in self.lattice)
            object.__setattr__(self, 'lattice', (m1, m2))
            if self.n is not None and self.n != m1 * m2:
                raise ValueError(f"n={self.n} disagrees with lattice {m1}x{m2}")
            object.__setattr__(self, 'n', m1 * m2)
        if self.n is None:
            raise ValueError("either n or lattice dimensions are required")
        if self.link.is_nonlinear and self.lattice is None:
            raise ValueError(f"link '{self.link.value}' requires lattice dimensions")

    @property
    def beta(self) -> np.ndarray:
        return np.asarray(self.beta0, dtype=float)


@dataclass
class SarDataset:
    """(y, X, W, Z) bundle with the scales used to draw the errors"""
    y: np.ndarray
    X: np.ndarray
    W: WeightMatrix
    sigma: Optional[np.ndarray] = None
    Z: Optional[InstrumentMatrix] = None

    def __post_init__(self):
        n = self.W.n
        if self.y.shape != (n,) or self.X.shape[0] != n:
            raise ValueError(
                f"inconsistent dataset: y {self.y.shape}, X {self.X.shape}, W n={n}"
            )
        if self.sigma is not None and np.any(self.sigma < 0):
            raise ValueError("sigma must be non-negative")

    @property
    def n(self) -> int:
        return self.W.n


@dataclass(frozen=True)
class McCell:
    """One (design, size, scheme, family, link) experiment"""
    design: DesignTag
    scheme: HeteroScheme
    family: ErrorFamily
    link: Link = Link.NULL_LINEAR
    n: Optional[int] = None
    lattice: Optional[Tuple[int, int]] = None
    p: Optional[int] = None

    def __post_init__(self):
        if self.lattice is not None:
            m1, m2 = (int(v) for v in self.lattice)
            object.__setattr__(self, 'lattice', (m1, m2))
            object.__setattr__(self, 'n', m1 * m2)
        if self.design is DesignTag.LATTICE and self.lattice is None:
            raise ValueError("lattice design needs lattice dimensions")
        if self.n is None:
            raise ValueError("cell needs n or lattice dimensions")
        if self.link.is_nonlinear and self.design is not DesignTag.LATTICE:
            raise ValueError("nonlinear links are generated on the lattice design only")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "design": self.design.value,
            "scheme": self.scheme.value,
            "family": self.family.value,
            "link": self.link.value,
            "n": self.n,
            "lattice": list(self.lattice) if self.lattice else None,
            "p": self.p,
        }


@dataclass
class McConfig:
    """Replication settings and the experiment grid"""
    grid: List[McCell]
    reps: int = MC_DEFAULTS['reps']
    alpha: float = MC_DEFAULTS['alpha']
    master_seed: int = MASTER_SEED
    parallel_workers: int = WORKERS
    failure_budget: float = MC_DEFAULTS['failure_budget']
    lambda0: float = DGP_DEFAULTS['lambda0']
    beta0: Tuple[float, ...] = DGP_DEFAULTS['beta0']

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.grid:
            raise ValueError("grid must not be empty")
        if self.parallel_workers < 1:
            raise ValueError("parallel_workers must be at least 1")


@dataclass(frozen=True)
class McCellResult:
    """Aggregated rejection rates for one cell"""
    design: str
    n: int
    p: int
    scheme: str
    family: str
    link: str
    reps: int
    failures: int
    reject_rate_chi2: float
    reject_rate_normal: float
    mc_se: float
    mc_se_normal: float
    t_mean: float
    t_var: float
    lattice: Optional[Tuple[int, int]] = None

    @property
    def effective_reps(self) -> int:
        return self.reps - self.failures

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['lattice'] = list(self.lattice) if self.lattice else None
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "McCellResult":
        data = dict(data)
        if data.get('lattice') is not None:
            data['lattice'] = tuple(data['lattice'])
        return cls(**data)


@dataclass
class McReport:
    """Per-cell results of a size or power experiment"""
    kind: str
    reps: int
    alpha: float
    master_seed: int
    cells: List[McCellResult] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "reps": self.reps,
            "alpha": self.alpha,
            "master_seed": self.master_seed,
            "cells": [cell.to_dict() for cell in self.cells],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "McReport":
        return cls(
            kind=data['kind'],
            reps=int(data['reps']),
            alpha=float(data['alpha']),
            master_seed=int(data['master_seed']),
            cells=[McCellResult.from_dict(c) for c in data['cells']],
        )
