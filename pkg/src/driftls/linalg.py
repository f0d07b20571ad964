"""Dense linear-algebra primitives: rank-1 inverse updates, SPD solves,
smallest eigenvalues.

These are the only routines in the package that touch factorizations; every
other module goes through them. All inputs are dense float64; dimensions are
desk-scale (d up to a few thousand), so full factorizations are always
affordable and no randomized or sparse variants are provided.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DegenerateUpdateError, SingularMatrixError
from .validation import as_square_matrix, as_vector, check_symmetric

# Denominator threshold below which a rank-1 inverse update is refused.
DEGENERACY_EPS = 1e-12


def sherman_morrison(inv: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Rank-1 update of a maintained inverse: given inv = A^{-1}, return
    (A + x x^T)^{-1}.

    Parameters
    ----------
    inv : (d, d) array
        Inverse of an SPD matrix A.
    x : (d,) array
        Update direction.

    Returns
    -------
    (d, d) array
        The updated inverse. No symmetrization pass is needed: the correction
        term (w w^T)/den is elementwise symmetric even in floats (w[i]*w[j]
        and w[j]*w[i] round identically), so a symmetric ``inv`` stays exactly
        symmetric over arbitrarily long update chains. Accuracy decay is
        handled by the callers' periodic refactorization, not here.

    Raises
    ------
    DegenerateUpdateError
        If the denominator 1 + x^T inv x falls at or below 1e-12, which for a
        true SPD inverse cannot happen and therefore signals numerical decay.
    """
    inv = as_square_matrix(inv, name="inv")
    x = as_vector(x, dim=inv.shape[0], name="x")
    w = inv @ x
    den = 1.0 + float(x @ w)
    if den <= DEGENERACY_EPS:
        raise DegenerateUpdateError(
            f"rank-1 update denominator {den:.3e} <= {DEGENERACY_EPS:.0e}"
        )
    return inv - np.outer(w, w) / den


def solve_spd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A via Cholesky.

    ``b`` may be a vector or a (d, k) block of right-hand sides. Raises
    ``SingularMatrixError`` when the factorization fails (non-SPD or
    numerically singular input) and ``ValueError`` for asymmetric input.
    """
    a = as_square_matrix(a)
    check_symmetric(a)
    b = np.asarray(b, dtype=np.float64)
    if b.ndim == 1:
        b = as_vector(b, dim=a.shape[0], name="b")
    elif b.ndim != 2 or b.shape[0] != a.shape[0] or not np.isfinite(b).all():
        raise ValueError("b must be a finite vector or (d, k) block")
    try:
        cf = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise SingularMatrixError(f"Cholesky factorization failed: {e}") from e
    return scipy.linalg.cho_solve(cf, b, check_finite=False)


def inverse_spd(a: np.ndarray) -> np.ndarray:
    """Full inverse of an SPD matrix through its Cholesky factor."""
    a = as_square_matrix(a)
    check_symmetric(a)
    try:
        cf = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as e:
        raise SingularMatrixError(f"Cholesky factorization failed: {e}") from e
    inv = scipy.linalg.cho_solve(cf, np.eye(a.shape[0]), check_finite=False)
    return (inv + inv.T) * 0.5


def min_eigenvalue(a: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Uses the LAPACK symmetric eigensolver restricted to the lowest eigenpair
    (tridiagonalization under the hood). Asymmetric input is a contract
    violation, not something to silently symmetrize: this value gates step
    size constants, so a wrong input must fail loudly.
    """
    a = as_square_matrix(a)
    check_symmetric(a)
    if a.shape[0] == 1:
        return float(a[0, 0])
    vals = scipy.linalg.eigh(
        a, eigvals_only=True, subset_by_index=[0, 0], check_finite=False
    )
    return float(vals[0])


@dataclass(frozen=True)
class SpdCert:
    """A matrix together with its certified smallest eigenvalue.

    Carries the strong-convexity constant wherever a step-size or bound
    evaluation needs it; ``min_eig`` is a lower bound on every Rayleigh
    quotient of ``matrix``.
    """

    matrix: np.ndarray
    min_eig: float


def certify_spd(a: np.ndarray) -> SpdCert:
    """Check symmetry + positive definiteness and return the certificate."""
    lo = min_eigenvalue(a)
    if lo <= 0.0:
        raise SingularMatrixError(f"matrix is not positive definite (λ_min = {lo:.3e})")
    return SpdCert(matrix=np.array(a, dtype=np.float64, copy=True), min_eig=lo)
