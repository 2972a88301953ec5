"""Finite-mode Hilbert space primitives.

States are one-dimensional float64 arrays of coordinates in a fixed
orthonormal basis; operators are dense float64 matrices mapping one
coordinate space into another.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def as_state(x) -> np.ndarray:
    """Coerce to a 1-D float64 coordinate vector."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"state must be a 1-D coordinate vector, got shape {arr.shape}")
    return arr


def as_operator(g) -> np.ndarray:
    arr = np.asarray(g, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"operator must be a 2-D matrix, got shape {arr.shape}")
    return arr


def norm(x) -> float:
    """Hilbert norm of a coordinate vector."""
    return float(np.linalg.norm(as_state(x)))


def inner(x, y) -> float:
    a, b = as_state(x), as_state(y)
    if a.shape != b.shape:
        raise DimensionError(f"inner product of shapes {a.shape} and {b.shape}")
    return float(a @ b)


def apply_operator(g, x) -> np.ndarray:
    """Apply a dense operator to a state vector."""
    mat, vec = as_operator(g), as_state(x)
    if mat.shape[1] != vec.shape[0]:
        raise DimensionError(f"operator of shape {mat.shape} applied to vector of length {vec.shape[0]}")
    return mat @ vec


def operator_norm(g) -> float:
    """Spectral (operator 2-) norm."""
    return float(np.linalg.norm(as_operator(g), 2))
