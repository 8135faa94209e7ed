import json
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from src.config import NUMERICS_CONFIG
from src.errors import DimensionError


class HermiteFamily(Enum):
    """Supported basis families"""
    PROBABILISTS = "hermite_probabilists"


@dataclass(frozen=True)
class BasisSpec:
    """Sieve basis: psi_j is the Hermite polynomial of degree j + degree_offset"""
    p: int
    family: HermiteFamily = HermiteFamily.PROBABILISTS
    degree_offset: int = 1
    standardize_argument: bool = False

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p}")
        if int(self.degree_offset) != self.degree_offset or self.degree_offset < 0:
            raise ValueError(f"degree_offset must be a non-negative integer, got {self.degree_offset}")
        if self.max_degree > NUMERICS_CONFIG['hermite_max_degree']:
            raise ValueError(
                f"basis needs degree {self.max_degree}, above the guard "
                f"{NUMERICS_CONFIG['hermite_max_degree']}"
            )

    def degree(self, j: int) -> int:
        """Polynomial degree of psi_j (1-based j)"""
        return j + self.degree_offset

    @property
    def max_degree(self) -> int:
        return self.p + self.degree_offset


@dataclass
class RegressorBlocks:
    """Upsilon (n x p) and U = [Upsilon, Wy, X]"""
    upsilon: np.ndarray
    U: np.ndarray
    wy: np.ndarray

    @property
    def p(self) -> int:
        return self.upsilon.shape[1]


@dataclass
class InstrumentMatrix:
    """n x m instruments with a label per column"""
    Z: np.ndarray
    column_labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.Z = np.asarray(self.Z, dtype=float)
        if self.Z.ndim != 2:
            raise DimensionError(f"Z must be a matrix, got shape {self.Z.shape}")
        if not self.column_labels:
            self.column_labels = [f"z{j + 1}" for j in range(self.m)]
        if len(self.column_labels) != self.m:
            raise DimensionError(
                f"{len(self.column_labels)} labels for {self.m} instrument columns"
            )

    @classmethod
    def from_array(cls, Z, labels: Optional[List[str]] = None) -> "InstrumentMatrix":
        return cls(np.asarray(Z, dtype=float), list(labels or []))

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def m(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class InstrumentDiagnostics:
    """Finite-sample admissibility checks for Z"""
    m: int
    required: int
    condition_number: float
    singular_ratio: float
    rank_ok: bool
    count_ok: bool
    mode: str = "custom"

    @property
    def passed(self) -> bool:
        return self.rank_ok and self.count_ok

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['passed'] = self.passed
        return data


@dataclass
class Sar2slsFit:
    """2SLS estimates of the linear SAR model, theta = (lambda, beta')'"""
    theta_hat: np.ndarray
    residuals: np.ndarray
    covariance: np.ndarray
    wy: np.ndarray

    @property
    def lambda_hat(self) -> float:
        return float(self.theta_hat[0])

    @property
    def beta_hat(self) -> np.ndarray:
        return self.theta_hat[1:]

    @property
    def robust_se(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def t_stats(self) -> np.ndarray:
        se = self.robust_se
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(se > 0, self.theta_hat / se, np.nan)

    @property
    def n(self) -> int:
        return self.residuals.shape[0]

    @property
    def k(self) -> int:
        return self.theta_hat.shape[0] - 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda_hat": self.lambda_hat,
            "beta_hat": self.beta_hat.tolist(),
            "robust_se": self.robust_se.tolist(),
            "t_stats": self.t_stats.tolist(),
            "n": self.n,
        }


@dataclass(frozen=True)
class LinearityTestResult:
    """Outcome of the linearity test of the spatial interaction"""
    p: int
    n: int
    quad_form: float
    t_stat: float
    crit_normal: float
    crit_chi2_std: float
    pval_normal: float
    pval_chi2: float
    reject_normal: bool
    reject_chi2: bool
    alpha: float
    cond_M: Optional[float] = None
    cond_H: Optional[float] = None
    quad_form_partitioned: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        """Flat dictionary of plain Python values"""
        data = {}
        for key, value in asdict(self).items():
            if isinstance(value, (np.floating, np.integer, np.bool_)):
                value = value.item()
            data[key] = value
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        """One-line human readable verdict"""
        chi2 = "REJECT" if self.reject_chi2 else "accept"
        normal = "REJECT" if self.reject_normal else "accept"
        return (
            f"T={self.t_stat:.4f} (p={self.p}, n={self.n}) | "
            f"chi2-based crit {self.crit_chi2_std:.4f}: {chi2} (pval {self.pval_chi2:.4f}) | "
            f"N(0,1) crit {self.crit_normal:.4f}: {normal} (pval {self.pval_normal:.4f}) "
            f"at alpha={self.alpha}"
        )
