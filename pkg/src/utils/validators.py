from typing import Optional

import numpy as np

from src.errors import DimensionError


class InputValidator:
    """Utility class for validating numerical inputs"""

    @staticmethod
    def as_vector(values, name: str, n: Optional[int] = None) -> np.ndarray:
        """Coerce to a finite 1-d float array, optionally of length n"""
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 2 and 1 in arr.shape:
            arr = arr.reshape(-1)
        if arr.ndim != 1:
            raise DimensionError(f"{name} must be a vector, got shape {arr.shape}")
        if n is not None and arr.shape[0] != n:
            raise DimensionError(f"{name} has length {arr.shape[0]}, expected {n}")
        if not np.all(np.isfinite(arr)):
            raise DimensionError(f"{name} contains non-finite values")
        return arr

    @staticmethod
    def as_matrix(values, name: str, n: Optional[int] = None,
                  k: Optional[int] = None) -> np.ndarray:
        """Coerce to a finite 2-d float array with optional row/column counts"""
        arr = np.asarray(values, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise DimensionError(f"{name} must be a matrix, got shape {arr.shape}")
        if n is not None and arr.shape[0] != n:
            raise DimensionError(f"{name} has {arr.shape[0]} rows, expected {n}")
        if k is not None and arr.shape[1] != k:
            raise DimensionError(f"{name} has {arr.shape[1]} columns, expected {k}")
        if not np.all(np.isfinite(arr)):
            raise DimensionError(f"{name} contains non-finite values")
        return arr

    @staticmethod
    def validate_alpha(alpha: float) -> tuple[bool, Optional[str]]:
        """
        Validate a significance level

        Returns:
            Tuple of (is_valid, error_message)
        """
        try:
            alpha = float(alpha)
        except (TypeError, ValueError):
            return False, f"alpha must be a number, got {alpha!r}"
        if not np.isfinite(alpha) or not 0.0 < alpha < 1.0:
            return False, f"alpha must lie strictly between 0 and 1, got {alpha}"
        return True, None

    @staticmethod
    def require_alpha(alpha: float) -> float:
        """Return alpha as float or raise ValueError"""
        ok, message = InputValidator.validate_alpha(alpha)
        if not ok:
            raise ValueError(message)
        return float(alpha)

    @staticmethod
    def check_index(i: int, n: int) -> int:
        """Validate a 0-based unit index"""
        if not isinstance(i, (int, np.integer)) or not 0 <= i < n:
            raise DimensionError(f"index {i} out of range for n={n}")
        return int(i)
