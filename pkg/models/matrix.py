"""Dense matrix value type.

A Matrix is a finite 2-D float64 numpy array. Vectors are matrices with a
single column; there is no separate vector type.
"""
from dataclasses import dataclass
from typing import Any

import numpy as np
import numpy.typing as npt

from core.errors import NumericalError, ShapeError

Matrix = npt.NDArray[np.float64]


def as_matrix(value: Any, name: str = "matrix") -> Matrix:
    """
    Validate and convert a value to a Matrix.

    1-D input is promoted to a column vector.

    Args:
        value: Array-like input
        name: Operand name used in error messages

    Returns:
        float64 2-D array (a copy if conversion was needed)

    Raises:
        ShapeError: If the input is empty or has more than two dimensions
        NumericalError: If any entry is NaN or infinite
    """
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got {arr.ndim} dimensions")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one row and one column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains NaN or infinite entries")
    return arr


def require_same_shape(a: Matrix, b: Matrix, what: str = "operands") -> None:
    """Raise ShapeError unless a and b have identical shapes."""
    if a.shape != b.shape:
        raise ShapeError(f"{what} have different shapes: {a.shape} vs {b.shape}")


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD factors: u (m×k), singular_values (k, nonincreasing), vt (k×n), k = min(m, n)."""

    u: Matrix
    singular_values: npt.NDArray[np.float64]
    vt: Matrix

    def reconstruct(self) -> Matrix:
        return (self.u * self.singular_values) @ self.vt
