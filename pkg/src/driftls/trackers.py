"""Stochastic-gradient trackers over a growing sample buffer.

Each tracker owns an iterate theta and draws samples uniformly at random from
a `DataBuffer` (its own, or a shared one attached with `bind`). One call to
`step(k)` performs k SGD updates against the buffer *as it currently stands*;
interleaving `observe`/`step` is how the drifting-target regime is driven.

The arithmetic of every update lives in `kernels`; this module handles state,
schedules, and sampling.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import kernels
from .buffer import DataBuffer
from .exceptions import NotReadyError
from .rng import make_rng
from .schedules import RegSchedule, StepSchedule
from .validation import as_matrix_2d, as_vector


class _BaseTracker(BaseEstimator):
    """Shared buffer/state plumbing; subclasses provide the update rule."""

    _DEFAULT_STEP = StepSchedule()

    def __init__(self, schedule=None, theta0=None, averaging=False, burn_in=0,
                 random_state=None, on_update=None):
        self.schedule = schedule
        self.theta0 = theta0
        self.averaging = averaging
        self.burn_in = burn_in
        self.random_state = random_state
        self.on_update = on_update

    @property
    def _sched(self) -> StepSchedule:
        return self.schedule if self.schedule is not None else self._DEFAULT_STEP

    # -- wiring ----------------------------------------------------------
    def bind(self, buffer: DataBuffer):
        """Attach a shared sample buffer (before or after it has data)."""
        if getattr(self, "_theta", None) is not None and buffer.dim != self.buffer_.dim:
            raise ValueError("cannot rebind to a buffer of different dimension")
        self.buffer_ = buffer
        return self

    def observe(self, x, y: float):
        """Append one sample to the attached buffer (creating one if needed)."""
        if getattr(self, "buffer_", None) is None:
            x = as_vector(x, name="x")
            self.buffer_ = DataBuffer(x.shape[0])
        self.buffer_.append(x, y)
        return self

    def reset(self):
        self.buffer_ = None
        self._theta = None
        return self

    def _ensure_state(self):
        buf = getattr(self, "buffer_", None)
        if buf is None or len(buf) == 0:
            raise NotReadyError("tracker needs at least one buffered sample")
        if getattr(self, "_theta", None) is None:
            d = buf.dim
            if self.theta0 is None:
                self._theta = np.zeros(d)
            else:
                self._theta = as_vector(self.theta0, dim=d, name="theta0").copy()
            self._avg_sum = np.zeros(d)
            self.n_steps_ = 0
            self.rng_ = make_rng(self.random_state)
            self._init_extra(d)

    def _init_extra(self, d: int):
        pass

    # -- stepping ----------------------------------------------------------
    def step(self, k: int = 1):
        """Run k stochastic updates against the current buffer contents."""
        if k < 1:
            raise ValueError("k must be >= 1")
        self._ensure_state()
        self._run_steps(int(k))
        if self.on_update is not None:
            self.on_update(self)
        return self

    def _run_steps(self, k: int):
        raise NotImplementedError

    def _draw(self, k: int) -> np.ndarray:
        return self.buffer_.sample_indices(self.rng_, k)

    def _burn_in_flag(self) -> int:
        return int(self.burn_in) if self.averaging else kernels.NO_AVERAGING

    # -- sklearn-style conveniences -----------------------------------------
    def partial_fit(self, X, y):
        """Feed samples one at a time, taking one step per arrival."""
        X = as_matrix_2d(X)
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y lengths differ")
        for i in range(X.shape[0]):
            self.observe(X[i], y[i])
            self.step(1)
        return self

    def fit(self, X, y):
        self.reset()
        return self.partial_fit(X, y)

    def predict(self, X) -> np.ndarray:
        X = as_matrix_2d(X, n_cols=self.coef_.shape[0])
        return X @ self.coef_

    @property
    def coef_(self) -> np.ndarray:
        if getattr(self, "_theta", None) is None:
            raise NotReadyError("tracker has no state yet (no samples observed)")
        return self._theta

    @property
    def avg_coef_(self) -> np.ndarray:
        """Arithmetic mean of post-step iterates past the burn-in."""
        if not self.averaging:
            raise NotReadyError("averaging is disabled for this tracker")
        if getattr(self, "_theta", None) is None:
            raise NotReadyError("tracker has no state yet")
        count = self.n_steps_ - self.burn_in
        if count < 1:
            raise NotReadyError("no steps past the burn-in yet")
        return self._avg_sum / count


class LeastSquaresTracker(_BaseTracker):
    """Plain SGD on the uniform-resampled squared loss.

    theta <- theta + gamma_n (y_i - theta.x_i) x_i with i ~ U{buffer}.
    """

    _DEFAULT_STEP = StepSchedule()

    def _run_steps(self, k: int):
        xs, ys = self.buffer_._raw()
        idx = self._draw(k)
        gammas = self._sched.values(self.n_steps_, k)
        kernels.fols_steps(self._theta, xs, ys, idx, gammas, self._avg_sum,
                           self._burn_in_flag(), self.n_steps_)
        self.n_steps_ += k


class RidgeTracker(_BaseTracker):
    """SGD on the ridge-penalized loss; the extra term -gamma_n lam_n theta
    pulls the iterate toward the regularized target.

    lam_n is evaluated at the *buffer length*, gamma_n at the tracker's own
    step count; the two indices coincide in the one-step-per-arrival regime.
    """

    _DEFAULT_STEP = StepSchedule.generic(1.0, 100.0)

    def __init__(self, schedule=None, penalty=None, theta0=None, averaging=False,
                 burn_in=0, random_state=None, on_update=None):
        super().__init__(schedule=schedule, theta0=theta0, averaging=averaging,
                         burn_in=burn_in, random_state=random_state,
                         on_update=on_update)
        self.penalty = penalty

    @property
    def _pen(self) -> RegSchedule:
        return self.penalty if self.penalty is not None else RegSchedule.power(0.6)

    def _run_steps(self, k: int):
        xs, ys = self.buffer_._raw()
        idx = self._draw(k)
        gammas = self._sched.values(self.n_steps_, k)
        lams = np.full(k, self._pen(len(self.buffer_)))
        kernels.frls_steps(self._theta, xs, ys, idx, gammas, lams, self._avg_sum,
                           self._burn_in_flag(), self.n_steps_)
        self.n_steps_ += k


class SvrgTracker(_BaseTracker):
    """Variance-reduced SGD on the ridge loss.

    Maintains an anchor iterate and its full gradient over the buffer; each
    update uses f'_i(theta) - f'_i(anchor) + F'(anchor). The anchor is reset
    (and the full gradient recomputed) every `epoch_len` steps; with
    `epoch_len=None` each epoch spans twice the buffer length at reset time.
    """

    _DEFAULT_STEP = StepSchedule.constant(5e-4)

    def __init__(self, schedule=None, penalty=None, epoch_len=None, theta0=None,
                 random_state=None, on_update=None):
        super().__init__(schedule=schedule, theta0=theta0, random_state=random_state,
                         on_update=on_update)
        self.penalty = penalty
        self.epoch_len = epoch_len

    @property
    def _pen(self) -> RegSchedule:
        return self.penalty if self.penalty is not None else RegSchedule.inverse(1.0)

    def _init_extra(self, d: int):
        self._anchor = None
        self._full_grad = None
        self._epoch_left = 0
        self.epochs_started_ = 0

    def _reset_anchor(self, xs, ys, n: int):
        self._anchor = self._theta.copy()
        lam = self._pen(n)
        # F'(anchor) = (1/n) X^T (X anchor - y) + lam * anchor
        self._full_grad = xs.T @ (xs @ self._anchor - ys) / n + lam * self._anchor
        self._epoch_left = int(self.epoch_len) if self.epoch_len else 2 * n
        self.epochs_started_ += 1

    def _run_steps(self, k: int):
        xs, ys = self.buffer_._raw()
        n = len(self.buffer_)
        done = 0
        while done < k:
            if self._epoch_left <= 0 or self._anchor is None:
                self._reset_anchor(xs, ys, n)
            take = min(k - done, self._epoch_left)
            idx = self._draw(take)
            gammas = self._sched.values(self.n_steps_, take)
            lams = np.full(take, self._pen(n))
            kernels.svrg_steps(self._theta, xs, ys, idx, gammas, lams,
                               self._anchor, self._full_grad)
            self.n_steps_ += take
            self._epoch_left -= take
            done += take

    @property
    def anchor_(self) -> np.ndarray:
        if getattr(self, "_theta", None) is None or self._anchor is None:
            raise NotReadyError("no epoch started yet")
        return self._anchor


class SagTracker(_BaseTracker):
    """Stochastic average gradient on the ridge loss.

    Keeps one gradient per buffer slot plus their running sum; each step
    refreshes slot i with f'_i(theta) and moves along the averaged sum. The
    memory is zero-initialized, so unseen slots contribute nothing; by default
    the sum is divided by the buffer length (`average_over="seen"` divides by
    the number of distinct slots refreshed so far instead).
    """

    _DEFAULT_STEP = StepSchedule.constant(5e-3)

    def __init__(self, schedule=None, penalty=None, average_over="buffer", theta0=None,
                 random_state=None, on_update=None):
        super().__init__(schedule=schedule, theta0=theta0, random_state=random_state,
                         on_update=on_update)
        self.penalty = penalty
        self.average_over = average_over

    @property
    def _pen(self) -> RegSchedule:
        return self.penalty if self.penalty is not None else RegSchedule.inverse(1.0)

    def _init_extra(self, d: int):
        if self.average_over not in ("buffer", "seen"):
            raise ValueError("average_over must be 'buffer' or 'seen'")
        cap = 64
        self._grad_mem = np.zeros((cap, d))
        self._seen = np.zeros(cap, dtype=np.uint8)
        self._grad_sum = np.zeros(d)
        self._seen_count = np.zeros(1, dtype=np.int64)

    def _sync_memory(self, n: int):
        cap = self._grad_mem.shape[0]
        if n > cap:
            new_cap = max(n, 2 * cap)
            mem = np.zeros((new_cap, self._grad_mem.shape[1]))
            mem[:cap] = self._grad_mem
            seen = np.zeros(new_cap, dtype=np.uint8)
            seen[:cap] = self._seen
            self._grad_mem, self._seen = mem, seen

    def _run_steps(self, k: int):
        xs, ys = self.buffer_._raw()
        n = len(self.buffer_)
        self._sync_memory(n)
        idx = self._draw(k)
        gammas = self._sched.values(self.n_steps_, k)
        lams = np.full(k, self._pen(n))
        lens = np.full(k, n, dtype=np.int64)
        kernels.sag_steps(self._theta, xs, ys, idx, gammas, lams, lens,
                          self._grad_mem[:n], self._grad_sum, self._seen[:n],
                          self._seen_count, self.average_over == "seen")
        self.n_steps_ += k

    @property
    def grad_sum_(self) -> np.ndarray:
        if getattr(self, "_theta", None) is None:
            raise NotReadyError("tracker has no state yet")
        return self._grad_sum

    @property
    def grad_memory_(self) -> np.ndarray:
        if getattr(self, "_theta", None) is None:
            raise NotReadyError("tracker has no state yet")
        return self._grad_mem[: len(self.buffer_)]


class ConfidenceTracker(_BaseTracker):
    """SGD estimate of the confidence weight vector phi ~ A_n^{-1} x_target.

    phi <- phi + gamma (x_target / n - (phi.x_i) x_i); at the fixed point,
    x_target^T phi recovers the exact interval width x_target^T A_n^{-1}
    x_target without ever forming an inverse. Rewards in the buffer are
    ignored; only the feature rows matter.
    """

    _DEFAULT_STEP = StepSchedule.generic(1.0, 100.0)

    def __init__(self, target_x=None, schedule=None, random_state=None, on_update=None):
        super().__init__(schedule=schedule, random_state=random_state, on_update=on_update)
        self.target_x = target_x

    def observe(self, x, y: float = 0.0):
        return super().observe(x, y)

    def _init_extra(self, d: int):
        if self.target_x is None:
            raise ValueError("target_x is required")
        self._target = as_vector(self.target_x, dim=d, name="target_x").copy()

    def _run_steps(self, k: int):
        xs, _ = self.buffer_._raw()
        n = len(self.buffer_)
        idx = self._draw(k)
        gammas = self._sched.values(self.n_steps_, k)
        inv_lens = np.full(k, 1.0 / n)
        kernels.phi_steps(self._theta, xs, idx, gammas, self._target, inv_lens)
        self.n_steps_ += k

    @property
    def phi_(self) -> np.ndarray:
        return self.coef_

    def estimate(self, x=None) -> float:
        """Estimated x^T A_n^{-1} x_target (x defaults to the target itself)."""
        phi = self.coef_
        v = self._target if x is None else as_vector(x, dim=phi.shape[0], name="x")
        return float(v @ phi)
