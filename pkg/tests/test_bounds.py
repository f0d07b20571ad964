"""Deviation-bound arithmetic.

The numeric regression targets here were computed by hand-transcribing the
formulas once and freezing the values; the code must keep reproducing them
bit for bit.
"""
import math

import numpy as np
import pytest

from driftls.bounds import BoundParams, beta_of, h_of, k1_of, k2_of, k_mu_c, pege_bound
from driftls.exceptions import ConfigError
from driftls.linalg import solve_spd
from driftls.rng import split_rng

PEGE_PARAMS = BoundParams(mu=0.25, c=12.8, d=2, n0=2, delta=0.1, theta_init_dist=1.0)


class TestBoundParams:
    def test_exponent(self):
        assert BoundParams(mu=1.0, c=3.2, d=1).exponent == 0.8

    def test_validation(self):
        with pytest.raises(ConfigError):
            BoundParams(mu=0.0, c=1.0, d=1)
        with pytest.raises(ConfigError):
            BoundParams(mu=1.0, c=-1.0, d=1)
        with pytest.raises(ConfigError):
            BoundParams(mu=1.0, c=1.0, d=0)
        with pytest.raises(ConfigError):
            BoundParams(mu=1.0, c=1.0, d=1, n0=0)
        with pytest.raises(ConfigError):
            BoundParams(mu=1.0, c=1.0, d=1, delta=1.0)
        with pytest.raises(ConfigError):
            BoundParams(mu=1.0, c=1.0, d=1, theta_init_dist=-0.5)

    def test_step_window_gate(self):
        # admissible iff exponent in (2/3, 1): for mu=1 that is c in (8/3, 4)
        BoundParams(mu=1.0, c=3.0, d=1).require_theorem1()
        with pytest.raises(ConfigError):
            BoundParams(mu=1.0, c=8.0 / 3.0, d=1).require_theorem1()
        with pytest.raises(ConfigError):
            BoundParams(mu=1.0, c=4.0, d=1).require_theorem1()
        with pytest.raises(ConfigError):
            BoundParams(mu=1.0, c=10.0, d=1).require_theorem1()

    def test_frozen(self):
        p = BoundParams(mu=1.0, c=3.2, d=1)
        with pytest.raises(AttributeError):
            p.mu = 2.0


class TestHOf:
    def test_pinned_values(self):
        assert h_of(1, BoundParams(mu=1, c=3.2, d=1, theta_init_dist=0.0)) == 2.0
        p = BoundParams(mu=1, c=3.2, d=1, theta_init_dist=1.5)
        assert h_of(100, p) == 151.09241199951148

    def test_e_gives_six(self):
        # dist 0: h = 2(1 + 2 ln^2 k); at k = e that is exactly 6
        p = BoundParams(mu=1, c=3.2, d=1, theta_init_dist=0.0)
        assert h_of(math.e, p) == pytest.approx(6.0, rel=1e-15)

    def test_monotone_in_k(self):
        p = BoundParams(mu=1, c=3.2, d=1, theta_init_dist=0.3)
        vals = [h_of(k, p) for k in (1, 2, 10, 100, 10**6)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_k_below_one_rejected(self):
        with pytest.raises(ValueError):
            h_of(0, BoundParams(mu=1, c=3.2, d=1))


class TestBetaOf:
    def test_pinned_value(self):
        p = BoundParams(mu=1, c=3.2, d=1, delta=0.1)
        assert beta_of(10, p) == 2035.9288744237049

    def test_matches_direct_formula(self):
        for d, delta, n in ((1, 0.1, 10), (4, 0.05, 100), (16, 0.5, 7), (2, 0.9, 2.5)):
            p = BoundParams(mu=1, c=3.2, d=d, delta=delta)
            lr = math.log(n * n / delta)
            expect = max(128.0 * d * math.log(n) * lr, (2.0 * lr) ** 2)
            assert beta_of(n, p) == expect

    def test_second_branch_can_dominate(self):
        # tiny delta at small n: the log-square term wins
        p = BoundParams(mu=1, c=3.2, d=1, delta=1e-10)
        lr = math.log(4.0 / 1e-10)
        assert beta_of(2, p) == (2.0 * lr) ** 2
        assert (2.0 * lr) ** 2 > 128.0 * math.log(2.0) * lr

    def test_fractional_n_allowed(self):
        p = BoundParams(mu=1, c=3.2, d=1)
        assert beta_of(2.5, p) > 0

    def test_n_below_two_rejected(self):
        with pytest.raises(ValueError):
            beta_of(1.5, BoundParams(mu=1, c=3.2, d=1))


class TestKMuC:
    def test_pinned_value(self):
        # c^2 / (16 (3 mu c / 8 - 1)) = 3.2 at mu=1, c=3.2 (up to round-off)
        assert k_mu_c(BoundParams(mu=1.0, c=3.2, d=1)) == pytest.approx(3.2, rel=1e-14)

    def test_gated_by_window(self):
        with pytest.raises(ConfigError):
            k_mu_c(BoundParams(mu=1.0, c=8.0 / 3.0, d=1))

    def test_blows_up_near_window_edge(self):
        near = k_mu_c(BoundParams(mu=1.0, c=8.0 / 3.0 + 1e-6, d=1))
        mid = k_mu_c(BoundParams(mu=1.0, c=3.2, d=1))
        assert near > 1e5 * mid / 3.2


class TestK1K2:
    def test_pinned_value(self):
        assert k1_of(10**4, PEGE_PARAMS) == 468.28121068332996

    def test_requires_n_past_n0(self):
        with pytest.raises(ValueError):
            k1_of(2, PEGE_PARAMS)
        with pytest.raises(ValueError):
            k1_of(1, PEGE_PARAMS)

    def test_k2_offset_is_n_independent(self):
        off = math.sqrt(2.0 * k_mu_c(PEGE_PARAMS) * math.log(1.0 / PEGE_PARAMS.delta))
        for n in (10, 1000, 10**5):
            assert k2_of(n, PEGE_PARAMS) - k1_of(n, PEGE_PARAMS) == pytest.approx(
                off, rel=1e-12
            )
        assert off > 0

    def test_normalized_bound_decreases(self):
        ns = 2 ** np.arange(7, 18)
        vals = [k1_of(int(n), PEGE_PARAMS) / math.sqrt(n + PEGE_PARAMS.c) for n in ns]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_pure_function(self):
        a = k1_of(12345, PEGE_PARAMS)
        b = k1_of(12345, PEGE_PARAMS)
        assert a == b


class TestPegeBound:
    def test_pinned_value(self):
        assert pege_bound(10**4, PEGE_PARAMS, norm_theta=1.0) == 21928729.22790453

    def test_symmetric_in_norm_inverse(self):
        a = pege_bound(500, PEGE_PARAMS, norm_theta=2.0)
        b = pege_bound(500, PEGE_PARAMS, norm_theta=0.5)
        assert a == b

    def test_linear_in_leading_constant(self):
        base = pege_bound(500, PEGE_PARAMS, norm_theta=1.0, C=1.0)
        assert pege_bound(500, PEGE_PARAMS, norm_theta=1.0, C=2.0) == pytest.approx(
            2.0 * base, rel=1e-15
        )

    def test_sqrt_n_growth(self):
        # K1 grows polylogarithmically, so quadrupling n slightly more than
        # doubles the bound but stays well under the next power
        a = pege_bound(10**4, PEGE_PARAMS, norm_theta=1.0)
        b = pege_bound(4 * 10**4, PEGE_PARAMS, norm_theta=1.0)
        assert 2.0 <= b / a <= 3.0

    def test_errors(self):
        with pytest.raises(ValueError):
            pege_bound(0, PEGE_PARAMS, norm_theta=1.0)
        with pytest.raises(ValueError):
            pege_bound(100, PEGE_PARAMS, norm_theta=0.0)


def test_confidence_radius_covers_estimator():
    """sqrt(beta_n / (n mu)) is a (1-delta) radius for the batch solution."""
    d, n, delta, sigma = 2, 64, 0.1, 0.25
    theta_star = np.array([0.6, -0.8])
    # alternating basis rows: mean gram = I/2 exactly
    xs = np.zeros((n, d))
    xs[::2, 0] = 1.0
    xs[1::2, 1] = 1.0
    mu = 0.5
    p = BoundParams(mu=mu, c=3.2 / mu, d=d, delta=delta)
    radius = math.sqrt(beta_of(n, p) / (n * mu))
    misses = 0
    for rng in split_rng(2024, 200):
        ys = xs @ theta_star + sigma * rng.uniform(-1.0, 1.0, size=n)
        theta_hat = solve_spd(xs.T @ xs, xs.T @ ys)
        if np.linalg.norm(theta_hat - theta_star) > radius:
            misses += 1
    assert misses <= delta * 200
