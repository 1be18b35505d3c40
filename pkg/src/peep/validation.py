"""Small input-validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, EmptyInput, NotFitted


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array with at least one row."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got ndim={A.ndim}")
    if A.shape[0] == 0 or A.shape[1] == 0:
        raise EmptyInput(f"{name} is empty (shape {A.shape})")
    return A


def as_vector(v, name: str = "v") -> np.ndarray:
    A = np.asarray(v, dtype=np.float64)
    if A.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got ndim={A.ndim}")
    return A


def check_length(v: np.ndarray, expected: int, name: str = "v") -> None:
    if v.shape[-1] != expected:
        raise DimensionMismatch(f"{name} has length {v.shape[-1]}, expected {expected}")


def check_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise NotFitted(f"{type(estimator).__name__} is not fitted; call fit first")
