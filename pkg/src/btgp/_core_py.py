"""Pure-Python numerical core.

Mirrors the compiled extension ``btgp._core`` function-for-function; the
backend selector picks whichever is available.  Algorithms are identical so
the two cores agree to rounding error:

* up-looking Cholesky factorization (in place, upper triangle),
* hyperbolic-rotation rank-one Cholesky downdate,
* regularized incomplete beta via a modified-Lentz continued fraction,
* Student-t cdf / log-pdf / inverse cdf built on it.
"""

import math

import numpy as np

_FPMIN = 1e-300
_CF_EPS = 1e-15
_CF_MAXIT = 300
# relative floor under which a downdated pivot is treated as breaking positivity
_DOWNDATE_RTOL = 8.9e-16


def chol_factor(a):
    """Factor SPD ``a`` in place into its upper Cholesky triangle.

    Returns -1 on success, else the index of the first non-positive pivot.
    The strict lower triangle is zeroed on success.
    """
    n = a.shape[0]
    for k in range(n):
        rk = a[:k, k]
        d = a[k, k] - rk @ rk
        if not (d > 0.0) or not math.isfinite(d):
            return k
        dk = math.sqrt(d)
        a[k, k] = dk
        if k + 1 < n:
            a[k, k + 1:] = (a[k, k + 1:] - rk @ a[:k, k + 1:]) / dk
    if n > 1:
        a[np.tril_indices(n, -1)] = 0.0
    return -1


def chol_downdate(r, v):
    """Downdate upper factor ``r`` in place so that R'T R' = RT R - v vT.

    ``v`` is overwritten.  Returns -1 on success, else the row at which the
    downdated pivot stopped being positive.
    """
    p = r.shape[0]
    for k in range(p):
        rkk = r[k, k]
        d = (rkk - v[k]) * (rkk + v[k])
        if not math.isfinite(d) or d <= _DOWNDATE_RTOL * rkk * rkk:
            return k
        dk = math.sqrt(d)
        c = dk / rkk
        s = v[k] / rkk
        r[k, k] = dk
        if k + 1 < p:
            r[k, k + 1:] = (r[k, k + 1:] - s * v[k + 1:]) / c
            v[k + 1:] = c * v[k + 1:] - s * r[k, k + 1:]
    return -1


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta ratio (modified Lentz).

    ``x`` may be an array; ``a`` and ``b`` are scalars.  Assumes every entry
    satisfies x < (a + 1)/(a + b + 2) so the fraction converges quickly.
    """
    x = np.asarray(x, dtype=float)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    np.copyto(d, _FPMIN, where=np.abs(d) < _FPMIN)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        np.copyto(d, _FPMIN, where=np.abs(d) < _FPMIN)
        c = 1.0 + aa / c
        np.copyto(c, _FPMIN, where=np.abs(c) < _FPMIN)
        d = 1.0 / d
        h = h * d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        np.copyto(d, _FPMIN, where=np.abs(d) < _FPMIN)
        c = 1.0 + aa / c
        np.copyto(c, _FPMIN, where=np.abs(c) < _FPMIN)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < _CF_EPS):
            break
    return h


def _betainc_vec(a, b, x):
    """Regularized incomplete beta I_x(a, b) for array ``x`` in [0, 1]."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    lo = x <= 0.0
    hi = x >= 1.0
    out[lo] = 0.0
    out[hi] = 1.0
    mid = ~(lo | hi)
    if np.any(mid):
        xm = x[mid]
        lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
        front = np.exp(a * np.log(xm) + b * np.log1p(-xm) - lbeta)
        direct = xm < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xm)
        if np.any(direct):
            xd = xm[direct]
            res[direct] = front[direct] * _betacf(a, b, xd) / a
        flipped = ~direct
        if np.any(flipped):
            xf = xm[flipped]
            res[flipped] = 1.0 - front[flipped] * _betacf(b, a, 1.0 - xf) / b
        out[mid] = res
    return out


def betainc(a, b, x):
    """Scalar regularized incomplete beta I_x(a, b)."""
    return float(_betainc_vec(a, b, np.array([x]))[0])


def t_cdf(x, dof, out):
    """Student-t cdf with ``dof`` degrees of freedom, written into ``out``."""
    x = np.asarray(x, dtype=float)
    xb = dof / (dof + x * x)
    tail = 0.5 * _betainc_vec(0.5 * dof, 0.5, xb)
    np.copyto(out, np.where(x <= 0.0, tail, 1.0 - tail))


def t_logpdf(x, dof, out):
    """Student-t log density with ``dof`` degrees of freedom."""
    x = np.asarray(x, dtype=float)
    lc = (math.lgamma(0.5 * (dof + 1.0)) - math.lgamma(0.5 * dof)
          - 0.5 * math.log(dof * math.pi))
    np.copyto(out, lc - 0.5 * (dof + 1.0) * np.log1p(x * x / dof))


# Acklam's rational approximation to the standard normal inverse cdf.
_NI_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_NI_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
_NI_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_NI_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)


def _norm_inv(p):
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_NI_C[0] * q + _NI_C[1]) * q + _NI_C[2]) * q + _NI_C[3]) * q
                  + _NI_C[4]) * q + _NI_C[5])
                / ((((_NI_D[0] * q + _NI_D[1]) * q + _NI_D[2]) * q + _NI_D[3]) * q + 1.0))
    if p > 0.97575:
        return -_norm_inv(1.0 - p)
    q = p - 0.5
    r = q * q
    return ((((((_NI_A[0] * r + _NI_A[1]) * r + _NI_A[2]) * r + _NI_A[3]) * r
              + _NI_A[4]) * r + _NI_A[5]) * q
            / (((((_NI_B[0] * r + _NI_B[1]) * r + _NI_B[2]) * r + _NI_B[3]) * r
                + _NI_B[4]) * r + 1.0))


def _t_cdf_scalar(x, dof):
    xb = dof / (dof + x * x)
    tail = 0.5 * betainc(0.5 * dof, 0.5, xb)
    return tail if x <= 0.0 else 1.0 - tail


def _t_pdf_scalar(x, dof):
    lc = (math.lgamma(0.5 * (dof + 1.0)) - math.lgamma(0.5 * dof)
          - 0.5 * math.log(dof * math.pi))
    return math.exp(lc - 0.5 * (dof + 1.0) * math.log1p(x * x / dof))


def _t_inv_scalar(p, dof):
    if not 0.0 < p < 1.0:
        return math.nan
    if p == 0.5:
        return 0.0
    flip = p > 0.5
    pp = 1.0 - p if flip else p
    if dof == 1.0:
        x = math.tan(math.pi * (pp - 0.5))
        return -x if flip else x
    if dof == 2.0:
        s = 2.0 * pp - 1.0
        x = s * math.sqrt(2.0 / (1.0 - s * s))
        return -x if flip else x
    # Cornish-Fisher start from the normal quantile, then safeguarded Newton
    u = _norm_inv(pp)
    u2 = u * u
    x = u * (1.0 + (u2 + 1.0) / (4.0 * dof)
             + ((5.0 * u2 + 16.0) * u2 + 3.0) / (96.0 * dof * dof))
    hi = 0.0
    lo = min(2.0 * x, -1.0)
    for _ in range(200):
        if _t_cdf_scalar(lo, dof) <= pp:
            break
        lo *= 2.0
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(100):
        f = _t_cdf_scalar(x, dof) - pp
        if f > 0.0:
            hi = x
        else:
            lo = x
        if abs(f) <= 1e-13 * pp or hi - lo <= 1e-13 * max(1.0, abs(x)):
            break
        step = f / _t_pdf_scalar(x, dof)
        xn = x - step
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        x = xn
    return -x if flip else x


def t_inv(p, dof, out):
    """Student-t inverse cdf, elementwise into ``out``."""
    p = np.asarray(p, dtype=float)
    for i in range(p.shape[0]):
        out[i] = _t_inv_scalar(p[i], dof)
