"""Measurement layer: tracking error, regret series, rate slopes, CTR."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_matrix_2d, as_vector


@dataclass(frozen=True)
class TrackingRecord:
    """One logged point of an error curve: iterate-vs-target distance at n."""

    n: int
    err: float
    wall_ns: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.err < 0:
            raise ValueError("err must be >= 0")


def tracking_error(theta, target) -> float:
    """l2 distance between an iterate and its moving target."""
    theta = as_vector(theta, name="theta")
    target = as_vector(target, dim=theta.shape[0], name="target")
    return float(np.linalg.norm(theta - target))


def cumulative_regret(actions, theta_star, best_value) -> np.ndarray:
    """Prefix sums of (best_value - x_n . theta*).

    ``best_value`` may be a scalar (fixed action set) or a per-round array
    (fresh arm draws each round).
    """
    theta_star = as_vector(theta_star, name="theta_star")
    X = as_matrix_2d(actions, n_cols=theta_star.shape[0])
    best = np.asarray(best_value, dtype=np.float64)
    if best.ndim not in (0, 1) or (best.ndim == 1 and best.shape[0] != X.shape[0]):
        raise ValueError("best_value must be scalar or one entry per round")
    inst = best - X @ theta_star
    return np.cumsum(inst)


def slope_fit(ns, values=None) -> float:
    """Least-squares slope of log(value) against log(n).

    Accepts either two aligned arrays or a single sequence of (n, value)
    pairs. Needs at least 10 points; all n and values must be positive.
    """
    if values is None:
        pairs = np.asarray(ns, dtype=np.float64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValueError("expected a sequence of (n, value) pairs")
        ns, values = pairs[:, 0], pairs[:, 1]
    ns = np.asarray(ns, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if ns.shape != values.shape or ns.ndim != 1:
        raise ValueError("ns and values must be aligned 1-D arrays")
    if ns.shape[0] < 10:
        raise ValueError("slope_fit needs at least 10 points")
    if not (np.all(ns > 0) and np.all(values > 0) and np.isfinite(values).all()):
        raise ValueError("slope_fit needs positive finite inputs")
    lx = np.log(ns)
    ly = np.log(values)
    a = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(a, ly, rcond=None)
    return float(coef[0])


def ctr_score(rewards) -> float:
    """Clicks per ten thousand rounds, from a binary reward trace."""
    r = np.asarray(rewards, dtype=np.float64).ravel()
    if r.size == 0:
        raise ValueError("ctr_score needs at least one round")
    if not np.all((r == 0.0) | (r == 1.0)):
        raise ValueError("ctr_score expects binary rewards")
    return float(r.mean() * 10000.0)
