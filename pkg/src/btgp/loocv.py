"""Leave-one-out cross-validation in O(n^3) total time.

Naively, scoring each held-out point means refitting the generalized least
squares problem and refactorizing the kernel matrix n times: O(n^4).  With
the full factorization in hand, every submodel quantity follows from O(n)
identities instead:

* deleted-system solves come from the abridged-solve update of the full
  solve against a column of K^-1,
* the p-by-p covariate Gram factor is rank-one downdated per point,
* deleted-matrix log-determinants follow from log det K + log (K^-1)_ii,
* quadratic forms against the deleted inverse downdate as bilinear forms.

Any downdate that loses positivity silently degrades that single index to
an explicit refit and increments a counter surfaced in the report.

The hyperparameter grid stays frozen across submodels (deterministic rules
make the per-node caches reusable), so a model-level score recombines the
kept nodes' submodel evidences into per-point mixture weights.
"""

import math
import time
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .btg import BTGModel, gls_solve
from .errors import (AllWeightsDegenerate, DowndateBreaksPositivity,
                     InvalidParams, NonPositiveVariance)
from .kernels import kernel_matrix
from .linalg import chol_downdate, cholesky
from .tmixture import PosteriorMixture, TMixtureComponent, quantile


@dataclass(frozen=True)
class LoocvNodeResult:
    """Per-left-out-index submodel quantities at one hyperparameter node."""

    locs: np.ndarray        # predictive t location at the held-out point
    qs: np.ndarray          # GLS residual of the deleted problem
    cs: np.ndarray          # predictive variance factor
    logdet_k: np.ndarray    # log det of the deleted kernel matrix
    logdet_rx: np.ndarray   # log det of the deleted covariate Gram matrix
    fallbacks: int          # indices that fell back to explicit refit


def _refit_index(cache, data, i, k_full=None):
    """Explicit submodel refit for one held-out index (the oracle path).

    Factors the deleted kernel matrix from scratch, then reads every
    submodel quantity off one stacked whitening solve: with W = R^-T M,
    z = R^-T Y, u = R^-T k_cross, the GLS solution, residual, predictive
    location k_crossT K^-1 (Y - M beta) = uT (z - W beta), and variance
    factor k* - uTu + hT (WTW)^-1 h all follow.
    """
    if k_full is None:
        k_full = kernel_matrix(data.x, cache.params)
    idx = np.arange(data.n) != i
    k_sub = np.delete(np.delete(k_full, i, 0), i, 1)
    k_cross = k_full[idx, i]        # off-diagonal entries carry no noise
    y_sub = cache.y_latent[idx]
    m_sub = data.covariates[idx]
    k_chol = cholesky(k_sub, jitter=cache.jitter)
    stacked = k_chol.half_solve(
        np.concatenate([m_sub, y_sub[:, None], k_cross[:, None]], axis=1))
    p = data.p
    w = stacked[:, :p]
    z = stacked[:, p]
    u = stacked[:, p + 1]
    rx_chol = cholesky(w.T @ w)
    beta = rx_chol.solve(w.T @ z)
    resid = z - w @ beta
    q = float(resid @ resid)
    loc = float(u @ resid + beta @ data.covariates[i])
    h = data.covariates[i] - w.T @ u
    hz = rx_chol.half_solve(h)
    c = float(1.0 + cache.params.noise_variance - u @ u + hz @ hz)
    if c <= 0:
        raise NonPositiveVariance(f"refit variance factor {c!r} at index {i}")
    return loc, q, c, k_chol.log_det, rx_chol.log_det


def loocv_node(cache, data):
    """All submodel quantities for one node via downdates and abridged solves.

    O(n^3) precompute (columns of K^-1 through the stored factor), then
    O(n p) work per index.
    """
    n, p = data.n, data.p
    if n - 1 <= p:
        raise InvalidParams("leave-one-out needs n - 1 > p")
    m_x = data.covariates
    y = cache.y_latent
    kinv = cache.k_chol.inverse()
    b = np.diag(kinv).copy()
    xhat = cache.k_chol.solve(y)
    g = cache.k_chol.solve(m_x)                  # K^-1 M, rows are v_i
    mt_xhat = m_x.T @ xhat
    noise = cache.params.noise_variance
    s2 = noise + cache.jitter     # diagonal excess of the factored matrix

    locs = np.empty(n)
    qs = np.empty(n)
    cs = np.empty(n)
    ld_k = np.empty(n)
    ld_rx = np.empty(n)
    fallbacks = 0
    logdet_full = cache.k_chol.log_det

    for i in range(n):
        try:
            rx_i = chol_downdate(cache.rx_chol, g[i] / math.sqrt(b[i]))
            beta_i = rx_i.solve(mt_xhat - (xhat[i] / b[i]) * g[i])
            w_r = xhat - g @ beta_i              # K^-1 (Y - M beta_i)
            r_full = y - m_x @ beta_i
            qs[i] = float(r_full @ w_r - w_r[i] ** 2 / b[i])
            locs[i] = float(r_full[i] - w_r[i] / b[i] + beta_i @ m_x[i])
            h = g[i] / b[i]
            z = rx_i.half_solve(h)
            cs[i] = float(noise + (1.0 - s2 * b[i]) / b[i] + z @ z)
            ld_k[i] = logdet_full + math.log(b[i])
            ld_rx[i] = rx_i.log_det
        except DowndateBreaksPositivity:
            locs[i], qs[i], cs[i], ld_k[i], ld_rx[i] = _refit_index(cache, data, i)
            fallbacks += 1
    return LoocvNodeResult(locs=locs, qs=qs, cs=cs, logdet_k=ld_k,
                           logdet_rx=ld_rx, fallbacks=fallbacks)


def loocv_node_refit(cache, data):
    """Naive path: explicitly refit every submodel (O(n^4) total)."""
    n = data.n
    k_full = kernel_matrix(data.x, cache.params)
    locs = np.empty(n)
    qs = np.empty(n)
    cs = np.empty(n)
    ld_k = np.empty(n)
    ld_rx = np.empty(n)
    for i in range(n):
        locs[i], qs[i], cs[i], ld_k[i], ld_rx[i] = _refit_index(cache, data, i, k_full)
    return LoocvNodeResult(locs=locs, qs=qs, cs=cs, logdet_k=ld_k,
                           logdet_rx=ld_rx, fallbacks=0)


def loocv_logdets(cache, data):
    """Both deleted log-determinants for every index in O(n^2) after the
    O(n^3) precompute: principal-minor identity for the kernel matrix and
    rank-one downdates for the covariate Gram matrix."""
    kinv = cache.k_chol.inverse()
    b = np.diag(kinv)
    g = cache.k_chol.solve(data.covariates)
    n = data.n
    ld_k = cache.k_chol.log_det + np.log(b)
    ld_rx = np.empty(n)
    for i in range(n):
        try:
            ld_rx[i] = chol_downdate(cache.rx_chol, g[i] / math.sqrt(b[i])).log_det
        except DowndateBreaksPositivity:
            _, _, _, _, ld_rx[i] = _refit_index(cache, data, i)
    return ld_k, ld_rx


@dataclass(frozen=True)
class LoocvReport:
    """Per-point LOOCV predictions and aggregate scores for a model."""

    medians: np.ndarray
    intervals: np.ndarray       # (n, 2) equal-tailed endpoints
    log_densities: np.ndarray
    rmse: float
    mae: float
    mean_log_density: float
    fallbacks: int
    seconds: float


def loocv_score(model, levels=(0.025, 0.975)):
    """Score a fitted model by fast LOOCV across its kept nodes.

    For each held-out point, submodel evidences recombine into mixture
    weights over the frozen node grid; the submodel mixture's median is the
    prediction and its log density scores the held-out label.
    """
    t0 = time.perf_counter()
    data = model.data
    n, p = data.n, data.p
    caches = model.kept_caches
    m = len(caches)
    power = model.config.jacobian_power
    if power is None:
        power = 1.0 - p / (n - 1)

    results = [loocv_node(cache, data) for cache in caches]
    dlogs = [np.log(np.asarray(cache.transform.derivative(data.y_norm)))
             for cache in caches]

    rule_w = model.rule.weights[model.sparsified.kept_indices]
    dof = (n - 1) - p
    medians = np.empty(n)
    intervals = np.empty((n, 2))
    log_densities = np.empty(n)
    lo_level, hi_level = min(levels), max(levels)

    for i in range(n):
        log_evs = np.array([
            -0.5 * results[j].logdet_k[i]
            - 0.5 * results[j].logdet_rx[i]
            - 0.5 * dof * math.log(max(results[j].qs[i], 1e-300))
            + power * (caches[j].log_jac - dlogs[j][i])
            for j in range(m)
        ])
        a = log_evs + np.log(np.abs(rule_w), where=rule_w != 0,
                             out=np.full(m, -np.inf))
        amax = float(np.max(a))
        if not np.isfinite(amax):
            raise AllWeightsDegenerate("all submodel evidences underflowed")
        t = np.sign(rule_w) * np.exp(a - amax)
        total = float(t.sum())
        if total <= 0:
            raise AllWeightsDegenerate("submodel weights sum to a non-positive value")
        w_i = t / total

        comps = tuple(
            TMixtureComponent(
                dof=dof,
                loc=float(results[j].locs[i]),
                scale=math.sqrt(max(results[j].qs[i], 1e-300)
                                * results[j].cs[i] / dof),
                transform=model.observation_transform(caches[j].transform))
            for j in range(m))
        mix = PosteriorMixture(components=comps, weights=w_i,
                               sparsification_eps=model.sparsification_eps)
        medians[i] = quantile(mix, 0.5)
        intervals[i, 0] = quantile(mix, lo_level)
        intervals[i, 1] = quantile(mix, hi_level)
        log_densities[i] = float(mix.logpdf(data.y[i]))

    err = medians - data.y
    return LoocvReport(
        medians=medians,
        intervals=intervals,
        log_densities=log_densities,
        rmse=float(np.sqrt(np.mean(err ** 2))),
        mae=float(np.mean(np.abs(err))),
        mean_log_density=float(np.mean(log_densities)),
        fallbacks=sum(r.fallbacks for r in results),
        seconds=time.perf_counter() - t0,
    )
