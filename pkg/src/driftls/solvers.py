"""Exact recursive least-squares estimators.

These maintain the running sums A_sum = sum x x^T and b_sum = sum y x and
answer for the exact minimizer at any time. `IncrementalOLS` additionally
keeps A_sum^{-1} up to date through rank-1 updates (with periodic
refactorization to stop drift), so appends cost O(d^2) once the stream has
full rank.
"""
from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import NotReadyError, SingularMatrixError
from .linalg import inverse_spd, sherman_morrison, solve_spd
from .schedules import RegSchedule
from .validation import as_matrix_2d, as_vector


class IncrementalOLS(BaseEstimator):
    """Streaming ordinary least squares with O(d^2) appends.

    Parameters
    ----------
    refactor_every : int
        Rebuild the maintained inverse from A_sum after this many rank-1
        updates, bounding accumulated floating-point drift.
    maintain_inverse : bool
        Keep A_sum^{-1} current on every append. Turned off by subclasses
        whose queries factorize a different (regularized) matrix.
    """

    # Promotion gate: an inverse computed from a freshly full-rank A_sum is
    # only trusted if it actually inverts A_sum. This is what separates
    # "saw d linearly independent samples" from a numerically rank-deficient
    # stream whose Cholesky merely failed to detect a zero pivot.
    _RESIDUAL_TOL = 1e-8

    def __init__(self, refactor_every: int = 1000, maintain_inverse: bool = True):
        self.refactor_every = refactor_every
        self.maintain_inverse = maintain_inverse

    # -- state helpers -------------------------------------------------
    def _ensure_state(self, d: int) -> None:
        if getattr(self, "n_seen_", None) is None:
            self.n_seen_ = 0
            self.dim_ = d
            self.a_sum_ = np.zeros((d, d))
            self.b_sum_ = np.zeros(d)
            self.inv_ = None
            self._since_refactor = 0
        elif d != self.dim_:
            raise ValueError(f"expected dimension {self.dim_}, got {d}")

    def reset(self):
        self.n_seen_ = None
        self.inv_ = None
        return self

    @property
    def ready_(self) -> bool:
        return getattr(self, "inv_", None) is not None

    # -- ingestion ------------------------------------------------------
    def observe(self, x, y: float):
        x = as_vector(x, name="x")
        y = float(y)
        if not np.isfinite(y):
            raise ValueError("y must be finite")
        self._ensure_state(x.shape[0])
        self.a_sum_ += np.outer(x, x)
        self.b_sum_ += y * x
        self.n_seen_ += 1
        if not self.maintain_inverse:
            return self
        if self.inv_ is None:
            self.inv_ = self._try_invert()
            self._since_refactor = 0
        else:
            self.inv_ = sherman_morrison(self.inv_, x)
            self._since_refactor += 1
            if self._since_refactor >= self.refactor_every:
                self.inv_ = inverse_spd(self.a_sum_)
                self._since_refactor = 0
        return self

    def _try_invert(self):
        try:
            inv = inverse_spd(self.a_sum_)
        except SingularMatrixError:
            return None
        resid = np.abs(self.a_sum_ @ inv - np.eye(self.dim_)).max()
        return inv if resid <= self._RESIDUAL_TOL else None

    def partial_fit(self, X, y):
        X = as_matrix_2d(X)
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y lengths differ")
        for i in range(X.shape[0]):
            self.observe(X[i], y[i])
        return self

    def fit(self, X, y):
        self.reset()
        return self.partial_fit(X, y)

    # -- queries ---------------------------------------------------------
    def solution(self) -> np.ndarray:
        if getattr(self, "n_seen_", None) is None:
            raise NotReadyError("no samples observed")
        if self.inv_ is not None:
            return self.inv_ @ self.b_sum_
        if not self.maintain_inverse:
            try:
                return solve_spd(self.a_sum_, self.b_sum_)
            except SingularMatrixError:
                pass
        raise NotReadyError(
            "solution undefined: fewer than dim linearly independent samples"
        )

    @property
    def coef_(self) -> np.ndarray:
        return self.solution()

    def predict(self, X) -> np.ndarray:
        X = as_matrix_2d(X, n_cols=getattr(self, "dim_", None))
        return X @ self.solution()

    def confidence(self, x) -> float:
        """x^T A_sum^{-1} x, the width term of the exact confidence interval."""
        if getattr(self, "n_seen_", None) is None:
            raise NotReadyError("confidence undefined before full rank")
        x = as_vector(x, dim=self.dim_, name="x")
        if self.inv_ is not None:
            return float(x @ self.inv_ @ x)
        if not self.maintain_inverse:
            try:
                return float(x @ solve_spd(self.a_sum_, x))
            except SingularMatrixError:
                pass
        raise NotReadyError("confidence undefined before full rank")

    def gram_mean(self) -> np.ndarray:
        if getattr(self, "n_seen_", None) is None or self.n_seen_ == 0:
            raise NotReadyError("no samples observed")
        return self.a_sum_ / self.n_seen_

    # -- snapshot ----------------------------------------------------------
    def to_json(self) -> str:
        if getattr(self, "n_seen_", None) is None:
            raise NotReadyError("no samples observed")
        return json.dumps(
            {
                "n": self.n_seen_,
                "a_sum": self.a_sum_.tolist(),
                "b_sum": self.b_sum_.tolist(),
            }
        )

    @classmethod
    def from_json(cls, payload: str, **params):
        data = json.loads(payload)
        est = cls(**params)
        a = np.asarray(data["a_sum"], dtype=np.float64)
        b = np.asarray(data["b_sum"], dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != (a.shape[0],):
            raise ValueError("malformed snapshot")
        est._ensure_state(a.shape[0])
        est.n_seen_ = int(data["n"])
        est.a_sum_ = a
        est.b_sum_ = b
        try:
            est.inv_ = inverse_spd(a)
        except SingularMatrixError:
            est.inv_ = None
        return est


class IncrementalRidge(IncrementalOLS):
    """Streaming ridge regression with a time-decaying penalty.

    The solution solves (A_sum/n + lam_n I) theta = b_sum/n where lam_n is
    given by `penalty` evaluated at the current sample count, so it is
    well-defined from the first sample on.
    """

    def __init__(self, penalty: RegSchedule | None = None, refactor_every: int = 1000):
        self.penalty = penalty
        self.refactor_every = refactor_every
        # ridge queries factorize A_sum/n + lam I directly; the plain inverse
        # is never consulted, so skip its upkeep
        self.maintain_inverse = False

    def _penalty(self) -> RegSchedule:
        return self.penalty if self.penalty is not None else RegSchedule.power(0.6)

    def solution(self) -> np.ndarray:
        if getattr(self, "n_seen_", None) is None or self.n_seen_ == 0:
            raise NotReadyError("solution undefined before any sample")
        n = self.n_seen_
        lam = self._penalty()(n)
        a = self.a_sum_ / n + lam * np.eye(self.dim_)
        return solve_spd(a, self.b_sum_ / n)

    def regularized_gram(self) -> np.ndarray:
        """A_sum + n*lam_n I (unnormalized), the matrix behind `confidence`."""
        if getattr(self, "n_seen_", None) is None or self.n_seen_ == 0:
            raise NotReadyError("no samples observed")
        n = self.n_seen_
        lam = self._penalty()(n)
        return self.a_sum_ + n * lam * np.eye(self.dim_)

    def confidence(self, x) -> float:
        a = self.regularized_gram()
        x = as_vector(x, dim=self.dim_, name="x")
        return float(x @ solve_spd(a, x))

    def confidences(self, X) -> np.ndarray:
        """Batch version of `confidence` with a single factorization."""
        a = self.regularized_gram()
        X = as_matrix_2d(X, n_cols=self.dim_)
        w = solve_spd(a, X.T)
        return np.einsum("ij,ji->i", X, w)
