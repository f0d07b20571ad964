"""Closed-form evaluators for the tracking and regret guarantees.

Everything here is a pure function of `BoundParams`; all logarithms are
natural. The evaluators are used by the harness to overlay theoretical
envelopes on measured tracking-error curves, so they must stay literal —
no tightening, no fudge factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .exceptions import ConfigError


@dataclass(frozen=True)
class BoundParams:
    """Problem constants shared by the bound evaluators.

    mu    smallest eigenvalue of the limiting design matrix
    c     step-size constant (gamma_n = c / (4 (c + n)))
    d     feature dimension
    n0    index from which the design is well conditioned
    delta confidence level for the high-probability bound
    theta_init_dist  ||theta_{n0} - theta*||, the burn-in distance
    """

    mu: float
    c: float
    d: int
    n0: int = 1
    delta: float = 0.1
    theta_init_dist: float = 1.0

    def __post_init__(self):
        if self.mu <= 0 or self.c <= 0:
            raise ConfigError("mu and c must be positive")
        if self.d < 1 or self.n0 < 1:
            raise ConfigError("d and n0 must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError("delta must lie in (0, 1)")
        if self.theta_init_dist < 0:
            raise ConfigError("theta_init_dist must be >= 0")

    @property
    def exponent(self) -> float:
        """mu*c/4, the contraction exponent of the step schedule."""
        return self.mu * self.c / 4.0

    def require_theorem1(self) -> None:
        e = self.exponent
        if not (2.0 / 3.0 < e < 1.0):
            raise ConfigError(
                f"step-size condition violated: mu*c/4 = {e:.6g} not in (2/3, 1); "
                f"choose c in ({8.0 / (3.0 * self.mu):.6g}, {4.0 / self.mu:.6g})"
            )


def h_of(k: int, p: BoundParams) -> float:
    """Martingale-increment envelope h(k) = 2 [1 + 2 (dist + ln k)^2]."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 * (1.0 + 2.0 * (p.theta_init_dist + math.log(k)) ** 2)


def beta_of(n: float, p: BoundParams) -> float:
    """Confidence-ball radius scale for the exact least-squares solution.

    max(128 d ln(n) ln(n^2/delta), (2 ln(n^2/delta))^2); valid for n >= 2.
    Non-integer n is accepted because k1_of evaluates it at n + c.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    ln_ratio = math.log(n * n / p.delta)
    return max(128.0 * p.d * math.log(n) * ln_ratio, (2.0 * ln_ratio) ** 2)


def k_mu_c(p: BoundParams) -> float:
    """Sub-Gaussian scale of the tracking error: c^2 / [16 (3 mu c / 8 - 1)].

    Positive exactly when the theorem1 admissibility window holds
    (require_theorem1).
    """
    p.require_theorem1()
    return p.c**2 / (16.0 * (3.0 * p.mu * p.c / 8.0 - 1.0))


def k1_of(n: int, p: BoundParams) -> float:
    """Expectation-bound constant: E||theta_n - target_n|| <= K1(n)/sqrt(n+c)."""
    p.require_theorem1()
    if n <= p.n0:
        raise ValueError(f"bound defined for n > n0 = {p.n0}")
    burn = p.theta_init_dist * math.log(p.n0) / (n + p.c) ** p.exponent
    sampling = math.sqrt(h_of(n, p))
    estimation = (math.sqrt(2.0) + math.sqrt(p.mu * beta_of(n + p.c, p))) / p.mu
    return burn + sampling + estimation


def k2_of(n: int, p: BoundParams) -> float:
    """High-probability constant: ||theta_n - target_n|| <= K2(n)/sqrt(n+c)
    with probability >= 1 - delta."""
    return math.sqrt(2.0 * k_mu_c(p) * math.log(1.0 / p.delta)) + k1_of(n, p)


def pege_bound(n: int, p: BoundParams, norm_theta: float, C: float = 1.0) -> float:
    """Cumulative-regret envelope C K1(n)^2 d^{-1} (s + 1/s) sqrt(n), s = ||theta*||."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if norm_theta <= 0:
        raise ValueError("pege_bound undefined for ||theta*|| = 0")
    k1 = k1_of(n, p)
    return C * k1 * k1 / p.d * (norm_theta + 1.0 / norm_theta) * math.sqrt(n)
