"""
Input validation utilities
"""

from typing import Any, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised for inputs outside an operation's precondition"""


class DimensionError(ValidationError):
    """Raised when matrix or signal shapes do not fit together"""


def validate_hbar(hbar: Any, name: str = "hbar") -> int:
    """Positive integer bound on the sampling interval"""
    if isinstance(hbar, bool) or not isinstance(hbar, (int, np.integer)):
        raise ValidationError(f"{name} must be an integer, got {hbar!r}")
    if hbar < 1:
        raise ValidationError(f"{name} must be >= 1, got {hbar}")
    return int(hbar)


def as_matrix(value: Any, name: str, shape: Sequence = None) -> np.ndarray:
    """Convert to a finite 2-D float array, optionally checking the shape (None = any)"""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got {arr.ndim} dimensions")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    if shape is not None:
        for axis, expected in enumerate(shape):
            if expected is not None and arr.shape[axis] != expected:
                raise DimensionError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


def as_signal(value: Any, name: str = "signal") -> np.ndarray:
    """Time-major signal array of shape (horizon, n); 1-D input is a scalar signal"""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be (horizon, n), got {arr.ndim} dimensions")
    if arr.shape[0] < 1:
        raise ValidationError(f"{name} must have at least one sample")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def require_symmetric(matrix: np.ndarray, name: str, tol: float = 1e-9) -> np.ndarray:
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"{name} must be square, got {matrix.shape}")
    scale = max(1.0, float(np.max(np.abs(matrix))) if matrix.size else 1.0)
    if np.max(np.abs(matrix - matrix.T), initial=0.0) > tol * scale:
        raise ValidationError(f"{name} must be symmetric")
    return 0.5 * (matrix + matrix.T)


def validate_positive(value: Any, name: str, allow_zero: bool = False) -> float:
    number = float(value)
    if not np.isfinite(number) or number < 0 or (number == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValidationError(f"{name} must be {bound}, got {value!r}")
    return number
