"""Mixtures of transformed Student-t distributions.

The posterior predictive at a point is a weighted mixture whose i-th
component is a Student-t in the i-th node's latent space, pushed through
that node's warp.  This module evaluates the mixture pdf/cdf in observation
space, brackets its quantiles analytically (convex hull of component
quantiles, or singular-weight shifted levels), and solves for quantiles
with Brent's method inside those brackets.

Signed weights (sparse-grid rules) are supported: the cdf is then treated
as a generalized cdf, bracketed through the positive-weight sub-mixture
with the dropped-mass widening, and Brent solves for a root of cdf - p
without assuming monotonicity.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import transforms
from .errors import BracketFailure, InvalidLevel, NotNormalized
from .rootfind import brent, expand_bracket
from .studentt import t_cdf, t_inv, t_logpdf

_LEVEL_CLIP = 1e-12


def _transform_domain(t):
    """Observation-space interval on which a transform chain is defined."""
    if isinstance(t, transforms.BoxCox):
        return (0.0, math.inf)
    if isinstance(t, transforms.Composed):
        lo, hi = -math.inf, math.inf
        for part in reversed(t.parts):
            plo, phi = _transform_domain(part)
            rlo, rhi = _transform_range(part)
            want_lo = max(plo, part.inverse(lo) if lo > rlo else plo)
            want_hi = min(phi, part.inverse(hi) if hi < rhi else phi)
            lo, hi = want_lo, want_hi
        return (lo, hi)
    return (-math.inf, math.inf)


def _transform_range(t):
    """Latent-space interval a transform chain can reach."""
    if isinstance(t, transforms.BoxCox):
        return ((-1.0 / t.lam, math.inf) if t.lam >= 1e-8 else (-math.inf, math.inf))
    if isinstance(t, transforms.Composed):
        lo, hi = -math.inf, math.inf
        for part in t.parts:
            rlo, rhi = _transform_range(part)
            lo = rlo if lo == -math.inf else max(rlo, part.forward(lo))
            hi = rhi if hi == math.inf else min(rhi, part.forward(hi))
        return (lo, hi)
    return (-math.inf, math.inf)


@dataclass(frozen=True)
class TMixtureComponent:
    """One mixture summand: a warped Student-t."""

    dof: float
    loc: float
    scale: float
    transform: transforms.Transform

    def __post_init__(self):
        if not self.dof >= 1:
            raise ValueError(f"degrees of freedom must be >= 1, got {self.dof!r}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale!r}")

    def cdf(self, y):
        z = (self.transform.forward(y) - self.loc) / self.scale
        return t_cdf(z, self.dof)

    def quantile(self, p):
        """Component quantile; clips to the domain edge when the latent
        level falls outside the warp's range (generalized inverse)."""
        latent = self.loc + self.scale * float(t_inv(p, self.dof))
        rlo, rhi = _transform_range(self.transform)
        dlo, dhi = _transform_domain(self.transform)
        if latent <= rlo:
            return dlo
        if latent >= rhi:
            return dhi
        return float(self.transform.inverse(latent))


@dataclass(frozen=True)
class PosteriorMixture:
    """Weighted mixture of warped Student-t components.

    Weights must sum to one; signed entries are permitted (sparse-grid
    rules).  ``sparsification_eps`` records the active sparsification error
    level and sets the default quantile ftol to twice its value.
    """

    components: Tuple[TMixtureComponent, ...]
    weights: np.ndarray
    sparsification_eps: Optional[float] = field(default=None)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if abs(float(w.sum()) - 1.0) > 1e-10:
            raise NotNormalized(f"mixture weights sum to {float(w.sum())!r}")
        if len(self.components) != len(w):
            raise ValueError("one weight per component required")

    @property
    def all_positive(self):
        return bool(np.all(self.weights > 0))

    def domain(self):
        """Intersection of the component transforms' domains."""
        lo, hi = -math.inf, math.inf
        for comp in self.components:
            dlo, dhi = _transform_domain(comp.transform)
            lo = max(lo, dlo)
            hi = min(hi, dhi)
        return lo, hi

    def pdf(self, y):
        """Observation-space density (change of variables per component)."""
        y_arr = np.asarray(y, dtype=float)
        out = np.zeros_like(y_arr, dtype=float)
        for w, comp in zip(self.weights, self.components):
            g = comp.transform.forward(y_arr)
            z = (g - comp.loc) / comp.scale
            d = comp.transform.derivative(y_arr)
            out = out + w * np.exp(t_logpdf(z, comp.dof)) * d / comp.scale
        return float(out) if np.isscalar(y) or np.ndim(y) == 0 else out

    def cdf(self, y):
        y_arr = np.asarray(y, dtype=float)
        out = np.zeros_like(y_arr, dtype=float)
        for w, comp in zip(self.weights, self.components):
            z = (comp.transform.forward(y_arr) - comp.loc) / comp.scale
            out = out + w * t_cdf(z, comp.dof)
        return float(out) if np.isscalar(y) or np.ndim(y) == 0 else out

    def logpdf(self, y):
        p = self.pdf(y)
        with np.errstate(divide="ignore"):
            return np.log(p)


def _check_level(p):
    if not 0.0 < p < 1.0:
        raise InvalidLevel(f"quantile level must lie in (0, 1), got {p!r}")


def quantile_bounds(mix, p, method="convex-hull"):
    """Analytic bracket [lo, hi] containing the mixture quantile at ``p``.

    ``convex-hull``: extreme component quantiles at level p.
    ``singular-weight``: per-component shifted levels p -/+ (1 - w_i); each
    side falls back to the convex hull when no component admits the shift.
    Requires positive weights summing to one.
    """
    _check_level(p)
    if not mix.all_positive:
        raise NotNormalized("quantile bounds require positive weights")
    qs = [comp.quantile(p) for comp in mix.components]
    hull = (min(qs), max(qs))
    if method == "convex-hull":
        return hull
    if method != "singular-weight":
        raise ValueError(f"unknown quantile bound method {method!r}")
    lo_candidates = []
    hi_candidates = []
    for w, comp in zip(mix.weights, mix.components):
        wbar = 1.0 - float(w)
        if p - wbar > 0.0:
            lo_candidates.append(comp.quantile(p - wbar))
        if p + wbar < 1.0:
            hi_candidates.append(comp.quantile(p + wbar))
    lo = max(c for c in lo_candidates if not math.isinf(c)) \
        if any(not math.isinf(c) for c in lo_candidates) else hull[0]
    hi = min(c for c in hi_candidates if not math.isinf(c)) \
        if any(not math.isinf(c) for c in hi_candidates) else hull[1]
    return lo, hi


@dataclass
class QuantileResult:
    value: float
    n_evals: int
    bracket: Tuple[float, float]


def _signed_bracket(mix, p, widen=0.0):
    """Bracket a signed-weight mixture quantile via its positive part.

    With S+ the positive mass and e- the (negative) sum of negative
    weights, the quantile of the full mixture at p lies between the
    positive sub-mixture's quantiles at levels p / S+ and (p - e-) / S+.
    """
    w = mix.weights
    pos = w > 0
    s_plus = float(w[pos].sum())
    e_minus = float(w[~pos].sum())
    sub = PosteriorMixture(
        components=tuple(c for c, keep in zip(mix.components, pos) if keep),
        weights=w[pos] / s_plus,
    )
    lo_level = np.clip((p - widen) / s_plus, _LEVEL_CLIP, 1.0 - _LEVEL_CLIP)
    hi_level = np.clip((p - e_minus + widen) / s_plus, _LEVEL_CLIP, 1.0 - _LEVEL_CLIP)
    lo = quantile_bounds(sub, float(lo_level), "convex-hull")[0]
    hi = quantile_bounds(sub, float(hi_level), "convex-hull")[1]
    return lo, hi


def quantile(mix, p, xtol=None, ftol=None, method="convex-hull",
             return_info=False):
    """Solve the mixture cdf for the level-``p`` quantile.

    Brent's method runs inside the analytic bracket for ``method`` in
    {"convex-hull", "singular-weight"}; ``method=None`` uses an uninformed
    expanding bracket (benchmark baseline).  ``ftol`` defaults to twice the
    active sparsification error level, else 1e-6.  Raises BracketFailure
    when a signed-weight cdf does not cross ``p`` inside the widened
    bracket.
    """
    _check_level(p)
    if ftol is None:
        eps = mix.sparsification_eps
        ftol = 2.0 * eps if eps else 1e-6

    def f(y):
        return mix.cdf(y) - p

    if method is None:
        # uninformed baseline: grow a bracket from the origin
        lo, hi, f_lo, f_hi, n_extra = expand_bracket(f, anchor=0.0,
                                                     half_width=1.0)
        res = brent(f, lo, hi, xtol=xtol or _default_xtol(lo, hi),
                    ftol=ftol, f_lo=f_lo, f_hi=f_hi)
        res.n_evals += n_extra
        out = QuantileResult(res.root, res.n_evals, (lo, hi))
        return out if return_info else out.value

    if mix.all_positive:
        lo, hi = quantile_bounds(mix, p, method)
        guess = float(np.average([c.quantile(p) for c in mix.components],
                                 weights=mix.weights))
    else:
        lo, hi = _signed_bracket(mix, p)
        guess = None
    if xtol is None:
        xtol = _default_xtol(lo, hi)
    if hi - lo <= xtol:
        out = QuantileResult(0.5 * (lo + hi), 0, (lo, hi))
        return out if return_info else out.value

    dlo, dhi = mix.domain()
    span = hi - lo
    lo_eval = lo + 1e-9 * span if lo <= dlo else lo
    hi_eval = hi - 1e-9 * span if hi >= dhi else hi
    n_evals = 0
    f_lo = f_hi = None

    # the weighted mean of component quantiles needs no cdf evaluations and
    # usually lands within ftol; otherwise it halves the bracket
    if guess is not None and lo_eval < guess < hi_eval:
        f_g = f(guess)
        n_evals += 1
        if abs(f_g) <= ftol:
            out = QuantileResult(guess, n_evals, (lo, hi))
            return out if return_info else out.value
        if f_g > 0.0:
            hi_eval, f_hi = guess, f_g
        else:
            lo_eval, f_lo = guess, f_g

    if f_lo is None:
        f_lo = f(lo_eval)
        n_evals += 1
    if f_lo > ftol:
        # cdf already above p at the left edge: at a clipped (domain-edge)
        # bracket the generalized quantile is the edge itself
        if lo <= dlo:
            out = QuantileResult(lo, n_evals, (lo, hi))
            return out if return_info else out.value
        if not mix.all_positive:
            lo2, _ = _signed_bracket(mix, p, widen=abs(f_lo))
            if lo2 < lo_eval:
                lo_eval, f_lo = lo2, f(lo2)
                n_evals += 1
        if f_lo > ftol:
            raise BracketFailure(
                f"cdf({lo_eval!r}) = {f_lo + p!r} exceeds level {p!r}")
    if f_hi is None:
        f_hi = f(hi_eval)
        n_evals += 1
    if -f_hi > ftol:
        if hi >= dhi:
            out = QuantileResult(hi, n_evals, (lo, hi))
            return out if return_info else out.value
        if not mix.all_positive:
            _, hi2 = _signed_bracket(mix, p, widen=abs(f_hi))
            if hi2 > hi_eval:
                hi_eval, f_hi = hi2, f(hi2)
                n_evals += 1
        if -f_hi > ftol:
            raise BracketFailure(
                f"cdf({hi_eval!r}) = {f_hi + p!r} below level {p!r}")
    res = brent(f, lo_eval, hi_eval, xtol=xtol, ftol=ftol,
                f_lo=f_lo, f_hi=f_hi)
    res.n_evals += n_evals
    out = QuantileResult(res.root, res.n_evals, (lo, hi))
    return out if return_info else out.value


def _default_xtol(lo, hi):
    scale = max(1.0, abs(lo) if math.isfinite(lo) else 1.0,
                abs(hi) if math.isfinite(hi) else 1.0)
    return 1e-10 * scale
