"""Squared-exponential covariance with per-dimension lengthscales.

The kernel has unit signal variance; the model's residual scale is carried
by the Student-t mixture, and observation noise enters as a diagonal
``noise_variance`` term on training covariances only.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams


@dataclass(frozen=True)
class KernelParams:
    """Per-dimension lengthscales and observation-noise variance."""

    lengthscales: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if np.any(ls <= 0) or not np.all(np.isfinite(ls)):
            raise InvalidParams(f"lengthscales must be positive, got {ls!r}")
        if self.noise_variance < 0 or not np.isfinite(self.noise_variance):
            raise InvalidParams(
                f"noise variance must be >= 0, got {self.noise_variance!r}")


def _scaled_sqdist(xa, xb, lengthscales):
    xa = np.atleast_2d(xa) / lengthscales
    xb = np.atleast_2d(xb) / lengthscales
    aa = np.sum(xa * xa, axis=1)[:, None]
    bb = np.sum(xb * xb, axis=1)[None, :]
    sq = aa + bb - 2.0 * (xa @ xb.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def kernel_matrix(x, params):
    """Training covariance: exp(-0.5 ||xi - xj||^2 scaled) + noise on the diagonal."""
    k = np.exp(-0.5 * _scaled_sqdist(x, x, params.lengthscales))
    if params.noise_variance:
        k[np.diag_indices_from(k)] += params.noise_variance
    return k


def cross_kernel(x, x_star, params):
    """Covariances k(xi, x*) against a latent (noise-free) test point.

    ``x_star`` may be a single point (returns a vector) or a stack of
    points, one per row (returns an n-by-m matrix of covariances).
    """
    x_star = np.asarray(x_star, dtype=float)
    single = x_star.ndim == 1
    k = np.exp(-0.5 * _scaled_sqdist(x, np.atleast_2d(x_star), params.lengthscales))
    return k[:, 0] if single else k
