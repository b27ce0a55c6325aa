"""Dense SPD matrix algebra used throughout the package.

Everything is built around an upper-triangular Cholesky factor: solves are
two back-substitutions against the stored factor, and leave-one-out updates
use rank-one downdates, principal-minor determinant identities, and abridged
solves instead of refactorizing.  No explicit matrix inverses are formed
except the columns of K^-1 needed by the leave-one-out identities, which are
obtained as triangular solves.

Numerical tolerances live here so there is a single place to audit them.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import _backend
from .errors import (
    DowndateBreaksPositivity,
    NonPositiveDiagonal,
    NonPositiveVariance,
    NotPositiveDefinite,
    ZeroPivot,
)

# absolute tolerance on pivots and pivot-like quantities
PIVOT_TOL = 1e-14
# default relative jitter (times the mean diagonal) added before factorizing
DEFAULT_JITTER = 1e-8


@dataclass(frozen=True)
class CholeskyFactor:
    """Upper-triangular factor R with RT R equal to the factored matrix."""

    R: np.ndarray
    log_det: float

    @property
    def n(self):
        return self.R.shape[0]

    def solve(self, b):
        """Solve (RT R) x = b via two triangular back-substitutions."""
        y = solve_triangular(self.R, b, trans="T", check_finite=False)
        return solve_triangular(self.R, y, check_finite=False)

    def half_solve(self, b):
        """Solve RT y = b (whitening half-solve)."""
        return solve_triangular(self.R, b, trans="T", check_finite=False)

    def inverse(self):
        """Dense inverse of the factored matrix (used by leave-one-out only)."""
        return self.solve(np.eye(self.n))


def cholesky(a, jitter=0.0):
    """Upper Cholesky factor of ``a + jitter * I``.

    Raises NotPositiveDefinite when a non-positive pivot arises, which
    signals an invalid kernel matrix or hyperparameters.
    """
    a = np.array(a, dtype=float, order="C")
    if jitter:
        a[np.diag_indices_from(a)] += jitter
    status = _backend.core.chol_factor(a)
    if status != -1:
        raise NotPositiveDefinite(f"non-positive pivot at row {status}")
    log_det = 2.0 * float(np.sum(np.log(np.diag(a))))
    return CholeskyFactor(R=a, log_det=log_det)


def chol_downdate(factor, v):
    """Factor of S - v vT given the factor of S, in O(p^2) rotations.

    Raises DowndateBreaksPositivity when the downdated matrix is not
    positive definite; callers fall back to a fresh factorization.
    """
    r = np.array(factor.R, dtype=float, order="C")
    status = _backend.core.chol_downdate(r, np.array(v, dtype=float))
    if status != -1:
        raise DowndateBreaksPositivity(f"downdate lost positivity at row {status}")
    log_det = 2.0 * float(np.sum(np.log(np.diag(r))))
    return CholeskyFactor(R=r, log_det=log_det)


def principal_minor_logdet(log_det_full, inv_diag_entry):
    """log det of the (i, i) principal minor from log det and (S^-1)_ii."""
    if inv_diag_entry <= PIVOT_TOL:
        raise NonPositiveDiagonal(
            f"inverse diagonal entry {inv_diag_entry!r} is not positive")
    return log_det_full + float(np.log(inv_diag_entry))


def abridged_solve(c, k_inv_col_i, i):
    """Solution of the deleted system K^(-i) x = y^(-i) from the full solve.

    ``c`` solves K c = y and ``k_inv_col_i`` is column i of K^-1.  The
    update c - (c_i / (K^-1)_ii) K^-1 e_i zeroes entry i by construction;
    deleting it yields the sub-system solution in O(n).
    """
    pivot = k_inv_col_i[i]
    if abs(pivot) <= PIVOT_TOL:
        raise ZeroPivot(f"(K^-1)_{i}{i} = {pivot!r} is numerically zero")
    r_i = c[i] / pivot
    out = c - r_i * k_inv_col_i
    return np.delete(out, i)


def bordered_schur_variance(k_chol, m_x, m_point, k_cross, k_star):
    """Predictive variance factor: the final Schur complement of the
    bordered matrix [[0, MT, m(x)], [M, K, Kx], [m(x)T, KxT, k(x,x)]].

    Equals k(x,x) - KxT u + hT (MT K^-1 M)^-1 h with u = K^-1 Kx and
    h = m(x) - MT u.  Strictly positive for points outside the training set.
    """
    u = k_chol.solve(k_cross)
    h = m_point - m_x.T @ u
    w = k_chol.half_solve(m_x)
    a = w.T @ w
    a_chol = cholesky(a)
    z = a_chol.half_solve(h)
    value = float(k_star - k_cross @ u + z @ z)
    if value <= PIVOT_TOL * max(1.0, abs(float(k_star))):
        raise NonPositiveVariance(
            f"variance factor {value!r}; duplicate training point or broken conditioning")
    return value
