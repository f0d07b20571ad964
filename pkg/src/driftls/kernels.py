"""Jitted inner loops for the per-step trackers.

Every tracker update in the package funnels through one of these kernels; the
estimator classes pre-draw the sample indices and pre-evaluate the schedules,
so the loops below are pure float64 arithmetic. This keeps the per-step cost
at the algorithmic O(d) / O(d^2) instead of interpreter overhead, which is
what the runtime benchmark measures.

Conventions shared by all kernels:
  theta / phi / inv are updated in place;
  xs is the (n, d) sample block, idx the pre-drawn row indices (idx[t] ranges
  over the rows the tracker was allowed to see at step t);
  gammas/lams hold the schedule values for each step of the batch;
  avg_sum accumulates post-step iterates for steps whose global index exceeds
  burn_in (pass burn_in = 2**62 to disable averaging at zero cost).
"""
from __future__ import annotations

import numpy as np
from numba import njit

NO_AVERAGING = 2**62


@njit(cache=True)
def fols_steps(theta, xs, ys, idx, gammas, avg_sum, burn_in, step0):
    d = theta.shape[0]
    for t in range(idx.shape[0]):
        i = idx[t]
        r = ys[i]
        for j in range(d):
            r -= theta[j] * xs[i, j]
        gr = gammas[t] * r
        for j in range(d):
            theta[j] += gr * xs[i, j]
        if step0 + t + 1 > burn_in:
            for j in range(d):
                avg_sum[j] += theta[j]


@njit(cache=True)
def frls_steps(theta, xs, ys, idx, gammas, lams, avg_sum, burn_in, step0):
    d = theta.shape[0]
    for t in range(idx.shape[0]):
        i = idx[t]
        g = gammas[t]
        lam = lams[t]
        r = ys[i]
        for j in range(d):
            r -= theta[j] * xs[i, j]
        for j in range(d):
            theta[j] += g * (r * xs[i, j] - lam * theta[j])
        if step0 + t + 1 > burn_in:
            for j in range(d):
                avg_sum[j] += theta[j]


@njit(cache=True)
def phi_steps(phi, xs, idx, gammas, target_x, inv_lens):
    # phi <- phi + g * (target_x / n - (phi . x_i) x_i); inv_lens[t] = 1/n at step t
    d = phi.shape[0]
    for t in range(idx.shape[0]):
        i = idx[t]
        g = gammas[t]
        s = 0.0
        for j in range(d):
            s += phi[j] * xs[i, j]
        coef = inv_lens[t]
        for j in range(d):
            phi[j] += g * (target_x[j] * coef - s * xs[i, j])


@njit(cache=True)
def svrg_steps(theta, xs, ys, idx, gammas, lams, anchor, full_grad):
    # theta <- theta - g * (f'_i(theta) - f'_i(anchor) + full_grad)
    # with f'_i(v) = -(y_i - v.x_i) x_i + lam v; the difference collapses to
    # (r_anchor - r) x_i + lam (theta - anchor).
    d = theta.shape[0]
    for t in range(idx.shape[0]):
        i = idx[t]
        g = gammas[t]
        lam = lams[t]
        r = ys[i]
        ra = ys[i]
        for j in range(d):
            r -= theta[j] * xs[i, j]
            ra -= anchor[j] * xs[i, j]
        dr = ra - r
        for j in range(d):
            theta[j] -= g * (dr * xs[i, j] + lam * (theta[j] - anchor[j]) + full_grad[j])


@njit(cache=True)
def sag_steps(
    theta, xs, ys, idx, gammas, lams, lens, grad_mem, grad_sum, seen, seen_count,
    divide_by_seen,
):
    # replace memory slot i with f'_i(theta), then theta -= (g / denom) grad_sum
    d = theta.shape[0]
    for t in range(idx.shape[0]):
        i = idx[t]
        if seen[i] == 0:
            seen[i] = 1
            seen_count[0] += 1
        lam = lams[t]
        r = ys[i]
        for j in range(d):
            r -= theta[j] * xs[i, j]
        for j in range(d):
            gnew = -r * xs[i, j] + lam * theta[j]
            grad_sum[j] += gnew - grad_mem[i, j]
            grad_mem[i, j] = gnew
        denom = float(seen_count[0]) if divide_by_seen else float(lens[t])
        scale = gammas[t] / denom
        for j in range(d):
            theta[j] -= scale * grad_sum[j]


@njit(cache=True)
def sm_chain(inv, xs, idx):
    """Chain of rank-1 inverse updates (the O(d^2) exact-maintenance step).

    Mirrors the production update arithmetic: the correction (w[a]*w[b])*s is
    formed product-first so a symmetric inv stays bitwise symmetric (hoisting
    w[a]/den out of the inner loop would break that). Returns 0 on success or
    the 1-based step of a degenerate denominator.
    """
    d = inv.shape[0]
    w = np.empty(d)
    for t in range(idx.shape[0]):
        i = idx[t]
        den = 1.0
        for a in range(d):
            s = 0.0
            for b in range(d):
                s += inv[a, b] * xs[i, b]
            w[a] = s
            den += s * xs[i, a]
        if den <= 1e-12:
            return t + 1
        s = 1.0 / den
        for a in range(d):
            wa = w[a]
            for b in range(d):
                inv[a, b] -= (wa * w[b]) * s
    return 0
