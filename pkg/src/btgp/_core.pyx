# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical core.

Scalar-loop kernels for the operations that dominate runtime (Cholesky
factorization and downdates, Student-t cdf/ppf via the regularized
incomplete beta).  ``btgp._core_py`` is the algorithm-identical fallback.
"""

from libc.math cimport fabs, isfinite, lgamma, log, log1p, exp, sqrt, tan, M_PI

cdef double _FPMIN = 1e-300
cdef double _CF_EPS = 1e-15
cdef int _CF_MAXIT = 300
cdef double _DOWNDATE_RTOL = 8.9e-16


cdef Py_ssize_t _chol_factor(double[:, ::1] a) nogil:
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double d, dk
    for k in range(n):
        d = a[k, k]
        for i in range(k):
            d -= a[i, k] * a[i, k]
        if not (d > 0.0) or not isfinite(d):
            return k
        dk = sqrt(d)
        a[k, k] = dk
        for j in range(k + 1, n):
            d = a[k, j]
            for i in range(k):
                d -= a[i, k] * a[i, j]
            a[k, j] = d / dk
    for i in range(1, n):
        for j in range(i):
            a[i, j] = 0.0
    return -1


def chol_factor(double[:, ::1] a):
    """Factor SPD ``a`` in place into its upper Cholesky triangle.

    Returns -1 on success, else the index of the first non-positive pivot.
    The strict lower triangle is zeroed on success.
    """
    cdef Py_ssize_t status
    with nogil:
        status = _chol_factor(a)
    return status


cdef Py_ssize_t _chol_downdate(double[:, ::1] r, double[::1] v) nogil:
    cdef Py_ssize_t p = r.shape[0]
    cdef Py_ssize_t j, k
    cdef double rkk, d, dk, c, s
    for k in range(p):
        rkk = r[k, k]
        d = (rkk - v[k]) * (rkk + v[k])
        if not isfinite(d) or d <= _DOWNDATE_RTOL * rkk * rkk:
            return k
        dk = sqrt(d)
        c = dk / rkk
        s = v[k] / rkk
        r[k, k] = dk
        for j in range(k + 1, p):
            r[k, j] = (r[k, j] - s * v[j]) / c
            v[j] = c * v[j] - s * r[k, j]
    return -1


def chol_downdate(double[:, ::1] r, double[::1] v):
    """Downdate upper factor ``r`` in place so that R'T R' = RT R - v vT.

    ``v`` is overwritten.  Returns -1 on success, else the row at which the
    downdated pivot stopped being positive.
    """
    cdef Py_ssize_t status
    with nogil:
        status = _chol_downdate(r, v)
    return status


cdef double _betacf(double a, double b, double x) nogil:
    # continued fraction for the incomplete beta ratio (modified Lentz)
    cdef double qab = a + b
    cdef double qap = a + 1.0
    cdef double qam = a - 1.0
    cdef double c = 1.0
    cdef double d = 1.0 - qab * x / qap
    cdef double h, aa, delta
    cdef int m, m2
    if fabs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if fabs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if fabs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < _CF_EPS:
            break
    return h


cdef double _betainc(double a, double b, double x) nogil:
    cdef double lbeta, front
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lbeta = lgamma(a) + lgamma(b) - lgamma(a + b)
    front = exp(a * log(x) + b * log1p(-x) - lbeta)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def betainc(double a, double b, double x):
    """Scalar regularized incomplete beta I_x(a, b)."""
    return _betainc(a, b, x)


cdef double _t_cdf_scalar(double x, double dof) nogil:
    cdef double tail = 0.5 * _betainc(0.5 * dof, 0.5, dof / (dof + x * x))
    return tail if x <= 0.0 else 1.0 - tail


cdef double _t_logpdf_scalar(double x, double dof) nogil:
    cdef double lc = (lgamma(0.5 * (dof + 1.0)) - lgamma(0.5 * dof)
                      - 0.5 * log(dof * M_PI))
    return lc - 0.5 * (dof + 1.0) * log1p(x * x / dof)


def t_cdf(double[::1] x, double dof, double[::1] out):
    """Student-t cdf with ``dof`` degrees of freedom, written into ``out``."""
    cdef Py_ssize_t i, n = x.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _t_cdf_scalar(x[i], dof)


def t_logpdf(double[::1] x, double dof, double[::1] out):
    """Student-t log density with ``dof`` degrees of freedom."""
    cdef Py_ssize_t i, n = x.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _t_logpdf_scalar(x[i], dof)


# Acklam's rational approximation to the standard normal inverse cdf.
cdef double[6] _NI_A = [-3.969683028665376e+01, 2.209460984245205e+02,
                        -2.759285104469687e+02, 1.383577518672690e+02,
                        -3.066479806614716e+01, 2.506628277459239e+00]
cdef double[5] _NI_B = [-5.447609879822406e+01, 1.615858368580409e+02,
                        -1.556989798598866e+02, 6.680131188771972e+01,
                        -1.328068155288572e+01]
cdef double[6] _NI_C = [-7.784894002430293e-03, -3.223964580411365e-01,
                        -2.400758277161838e+00, -2.549732539343734e+00,
                        4.374664141464968e+00, 2.938163982698783e+00]
cdef double[4] _NI_D = [7.784695709041462e-03, 3.224671290700398e-01,
                        2.445134137142996e+00, 3.754408661907416e+00]


cdef double _norm_inv(double p) nogil:
    cdef double q, r
    if p < 0.02425:
        q = sqrt(-2.0 * log(p))
        return ((((((_NI_C[0] * q + _NI_C[1]) * q + _NI_C[2]) * q + _NI_C[3]) * q
                  + _NI_C[4]) * q + _NI_C[5])
                / ((((_NI_D[0] * q + _NI_D[1]) * q + _NI_D[2]) * q
                    + _NI_D[3]) * q + 1.0))
    if p > 0.97575:
        return -_norm_inv(1.0 - p)
    q = p - 0.5
    r = q * q
    return ((((((_NI_A[0] * r + _NI_A[1]) * r + _NI_A[2]) * r + _NI_A[3]) * r
              + _NI_A[4]) * r + _NI_A[5]) * q
            / (((((_NI_B[0] * r + _NI_B[1]) * r + _NI_B[2]) * r + _NI_B[3]) * r
                + _NI_B[4]) * r + 1.0))


cdef double _t_inv_scalar(double p, double dof) nogil:
    cdef double pp, s, u, u2, x, lo, hi, f, xn
    cdef bint flip
    cdef int it
    if not (0.0 < p < 1.0):
        return 0.0 / 0.0
    if p == 0.5:
        return 0.0
    flip = p > 0.5
    pp = 1.0 - p if flip else p
    if dof == 1.0:
        x = tan(M_PI * (pp - 0.5))
        return -x if flip else x
    if dof == 2.0:
        s = 2.0 * pp - 1.0
        x = s * sqrt(2.0 / (1.0 - s * s))
        return -x if flip else x
    # Cornish-Fisher start from the normal quantile, then safeguarded Newton
    u = _norm_inv(pp)
    u2 = u * u
    x = u * (1.0 + (u2 + 1.0) / (4.0 * dof)
             + ((5.0 * u2 + 16.0) * u2 + 3.0) / (96.0 * dof * dof))
    hi = 0.0
    lo = 2.0 * x if 2.0 * x < -1.0 else -1.0
    for it in range(200):
        if _t_cdf_scalar(lo, dof) <= pp:
            break
        lo *= 2.0
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for it in range(100):
        f = _t_cdf_scalar(x, dof) - pp
        if f > 0.0:
            hi = x
        else:
            lo = x
        if fabs(f) <= 1e-13 * pp or hi - lo <= 1e-13 * max(1.0, fabs(x)):
            break
        xn = x - f / exp(_t_logpdf_scalar(x, dof))
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        x = xn
    return -x if flip else x


def t_inv(double[::1] p, double dof, double[::1] out):
    """Student-t inverse cdf, elementwise into ``out``."""
    cdef Py_ssize_t i, n = p.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _t_inv_scalar(p[i], dof)
