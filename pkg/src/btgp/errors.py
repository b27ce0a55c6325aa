"""Exception types shared across the package.

Every numerical failure raised by this package derives from ``BtgpError``,
so callers (notably the CLI) can map them to a single exit code.
"""


class BtgpError(Exception):
    """Base class for all package-specific failures."""


# -- linear algebra ---------------------------------------------------------

class NotPositiveDefinite(BtgpError):
    """Cholesky factorization hit a non-positive pivot."""


class DowndateBreaksPositivity(BtgpError):
    """A rank-one downdate would leave the matrix indefinite."""


class NonPositiveDiagonal(BtgpError):
    """An inverse-diagonal entry that must be positive was not."""


class ZeroPivot(BtgpError):
    """Abridged solve requested at an index with a (numerically) zero pivot."""


class NonPositiveVariance(BtgpError):
    """Predictive variance factor came out non-positive."""


class RankDeficient(BtgpError):
    """Covariate matrix is rank deficient under the kernel-inverse metric."""


# -- transforms --------------------------------------------------------------

class InvalidParams(BtgpError):
    """Transform or kernel parameters violate their constraints."""


class DomainError(BtgpError):
    """Input outside the domain of a transform."""


class RangeError(BtgpError):
    """Value outside the range of a transform (no preimage)."""


# -- quadrature --------------------------------------------------------------

class ResourceLimit(BtgpError):
    """A quadrature rule would exceed the configured node cap."""


class EpsilonTooLarge(BtgpError):
    """Sparsification tolerance outside (0, 1)."""


class NotNormalized(BtgpError):
    """Positive-weight sparsification requires weights summing to one."""


# -- mixtures / quantiles ----------------------------------------------------

class InvalidLevel(BtgpError):
    """Quantile level outside (0, 1)."""


class BracketFailure(BtgpError):
    """Root bracket does not enclose the requested quantile."""


# -- model fitting -----------------------------------------------------------

class AllWeightsDegenerate(BtgpError):
    """Every quadrature node's evidence underflowed; the box is mis-scaled."""


class OptimizationFailed(BtgpError):
    """No optimizer start produced a finite objective."""


class LengthMismatch(BtgpError):
    """Prediction and truth vectors differ in length."""
