"""Bracketed scalar root-finding (Brent's method) with evaluation counting.

The quantile solver wants two things scipy's brentq does not expose: an
f-based termination tolerance matched to the quadrature sparsification
error, and the number of function evaluations spent (the benchmark compares
bracketed against expanding-bracket searches by evaluation count).
"""

import math
from dataclasses import dataclass

from .errors import BracketFailure

_EPS = 2.220446049250313e-16


@dataclass
class RootResult:
    root: float
    f_root: float
    n_evals: int
    converged: bool


def brent(f, lo, hi, xtol=1e-12, ftol=0.0, max_iter=200, f_lo=None, f_hi=None):
    """Find a root of ``f`` in [lo, hi] with f(lo), f(hi) of opposite sign.

    Terminates when the bracket is narrower than ``xtol`` (plus a relative
    machine term) or when |f| <= ftol.  Pass precomputed endpoint values via
    ``f_lo``/``f_hi`` to avoid re-evaluation; they count as zero extra evals.
    """
    n_evals = 0
    a, b = float(lo), float(hi)
    if f_lo is None:
        f_lo = f(a)
        n_evals += 1
    if f_hi is None:
        f_hi = f(b)
        n_evals += 1
    fa, fb = float(f_lo), float(f_hi)

    if fa == 0.0 or abs(fa) <= ftol:
        return RootResult(a, fa, n_evals, True)
    if fb == 0.0 or abs(fb) <= ftol:
        return RootResult(b, fb, n_evals, True)
    if fa * fb > 0.0:
        raise BracketFailure(f"no sign change on [{lo!r}, {hi!r}]")

    c, fc = a, fa
    d = e = b - a
    for _ in range(max_iter):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * _EPS * abs(b) + 0.5 * xtol
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0 or abs(fb) <= ftol:
            return RootResult(b, fb, n_evals, True)
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        if abs(d) > tol1:
            b += d
        else:
            b += math.copysign(tol1, xm)
        fb = f(b)
        n_evals += 1
    return RootResult(b, fb, n_evals, False)


def expand_bracket(f, anchor=0.0, half_width=1.0, grow=2.0, max_steps=200):
    """Grow [anchor - w, anchor + w] geometrically until f changes sign.

    Returns (lo, hi, f_lo, f_hi, n_evals).  Used as an uninformed baseline
    against analytic quantile brackets.
    """
    lo = anchor - half_width
    hi = anchor + half_width
    f_lo = f(lo)
    f_hi = f(hi)
    n_evals = 2
    step = half_width
    for _ in range(max_steps):
        if f_lo * f_hi <= 0.0:
            return lo, hi, f_lo, f_hi, n_evals
        step *= grow
        if f_lo > 0.0:
            lo -= step
            f_lo = f(lo)
        else:
            hi += step
            f_hi = f(hi)
        n_evals += 1
    raise BracketFailure("could not bracket a sign change while expanding")
