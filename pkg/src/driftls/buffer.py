"""Append-only sample history with uniform random indexing.

One buffer instance is typically shared: the policy (or stream driver) appends,
while several trackers draw from it. Appends never move or mutate existing
rows as seen through the exposed views.
"""
from __future__ import annotations

import numpy as np

from .validation import as_vector


class DataBuffer:
    """Growing store of (x, y) samples backed by doubling numpy arrays."""

    def __init__(self, dim: int, capacity: int = 64):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = int(dim)
        cap = max(int(capacity), 1)
        self._xs = np.empty((cap, self.dim), dtype=np.float64)
        self._ys = np.empty(cap, dtype=np.float64)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    def append(self, x, y: float) -> int:
        """Append one sample; returns the new length."""
        x = as_vector(x, dim=self.dim)
        y = float(y)
        if not np.isfinite(y):
            raise ValueError("y must be finite")
        if self._n == self._xs.shape[0]:
            self._grow(2 * self._n)
        self._xs[self._n] = x
        self._ys[self._n] = y
        self._n += 1
        return self._n

    def extend(self, xs, ys) -> int:
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        ys = np.asarray(ys, dtype=np.float64).ravel()
        if xs.shape != (ys.size, self.dim):
            raise ValueError(f"shape mismatch: xs {xs.shape}, ys {ys.shape}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("samples contain non-finite entries")
        need = self._n + ys.size
        if need > self._xs.shape[0]:
            self._grow(max(need, 2 * self._xs.shape[0]))
        self._xs[self._n : need] = xs
        self._ys[self._n : need] = ys
        self._n = need
        return self._n

    def _grow(self, cap: int):
        xs = np.empty((cap, self.dim), dtype=np.float64)
        ys = np.empty(cap, dtype=np.float64)
        xs[: self._n] = self._xs[: self._n]
        ys[: self._n] = self._ys[: self._n]
        self._xs, self._ys = xs, ys

    @property
    def xs(self) -> np.ndarray:
        """(len, dim) read-only view of the stored features."""
        v = self._xs[: self._n]
        v.flags.writeable = False
        return v

    @property
    def ys(self) -> np.ndarray:
        v = self._ys[: self._n]
        v.flags.writeable = False
        return v

    def x_at(self, i: int) -> np.ndarray:
        if not 0 <= i < self._n:
            raise IndexError(i)
        return self._xs[i].copy()

    def y_at(self, i: int) -> float:
        if not 0 <= i < self._n:
            raise IndexError(i)
        return float(self._ys[i])

    def sample_indices(self, rng: np.random.Generator, count: int = 1) -> np.ndarray:
        """Draw ``count`` indices uniformly from {0..len-1}."""
        if self._n == 0:
            raise ValueError("cannot draw from an empty buffer")
        return rng.integers(0, self._n, size=count)

    # Raw (writable) arrays for the jitted kernels; internal use.
    def _raw(self) -> tuple[np.ndarray, np.ndarray]:
        return self._xs[: self._n], self._ys[: self._n]
