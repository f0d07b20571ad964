"""Input validation helpers used by the estimator-facing surfaces.

Everything is coerced to contiguous float64 — the numeric tolerances across
the package assume ~1e-15 machine epsilon.
"""
from __future__ import annotations

import numpy as np


def as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if v.size < 1:
        raise ValueError(f"{name} must have at least one entry")
    if dim is not None and v.size != dim:
        raise ValueError(f"{name} has dimension {v.size}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def as_square_matrix(a, dim: int | None = None, name: str = "A") -> np.ndarray:
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"{name} has dimension {m.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def check_symmetric(a: np.ndarray, tol: float = 1e-10, name: str = "A") -> np.ndarray:
    # relative symmetry: |A - A^T| small against the matrix scale
    scale = max(float(np.abs(a).max()), 1.0)
    if float(np.abs(a - a.T).max()) > tol * scale:
        raise ValueError(f"{name} is not symmetric within tolerance {tol}")
    return a


def as_matrix_2d(x, n_cols: int | None = None, name: str = "X") -> np.ndarray:
    """Coerce a sample block to 2-D (n_samples, d); a single vector becomes one row."""
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {m.shape}")
    if n_cols is not None and m.shape[1] != n_cols:
        raise ValueError(f"{name} has {m.shape[1]} columns, expected {n_cols}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m
