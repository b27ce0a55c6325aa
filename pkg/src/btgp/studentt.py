"""Standardized Student-t distribution functions.

Thin wrappers over the numerical core (compiled or pure Python), which
implements the cdf through the regularized incomplete beta function and the
inverse cdf by a Newton-refined normal-quantile start.  Keeping these
in-package makes the distribution machinery testable against independent
series/continued-fraction oracles and free of runtime dependencies.
"""

import numpy as np

from . import _backend
from .errors import InvalidLevel


def _apply(fn, x, dof):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    flat = np.ascontiguousarray(x.reshape(-1))
    out = np.empty_like(flat)
    fn(flat, float(dof), out)
    if scalar:
        return float(out[0])
    return out.reshape(x.shape)


def t_cdf(x, dof):
    """Student-t cumulative distribution function."""
    return _apply(_backend.core.t_cdf, x, dof)


def t_logpdf(x, dof):
    """Student-t log density."""
    return _apply(_backend.core.t_logpdf, x, dof)


def t_pdf(x, dof):
    """Student-t density."""
    return np.exp(t_logpdf(x, dof))


def t_inv(p, dof):
    """Student-t inverse cdf (quantile function)."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise InvalidLevel(f"quantile levels must lie in (0, 1), got {p!r}")
    return _apply(_backend.core.t_inv, p, dof)


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    return _backend.core.betainc(float(a), float(b), float(x))
