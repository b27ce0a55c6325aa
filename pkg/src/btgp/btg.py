"""Bayesian transformed Gaussian process regression.

The model warps labels through a parametric transform, places a GP over the
latent values with a linear mean field, and marginalizes mean coefficients
and signal precision analytically.  Conditioned on kernel and transform
hyperparameters the latent predictive at a point is a Student-t with n - p
degrees of freedom; marginalizing the remaining hyperparameters over a
quadrature rule turns the posterior predictive into a weighted mixture of
warped Student-t distributions.  Prediction inverts that mixture's cdf at
the requested levels (median and credible interval endpoints), since the
mixture need not have moments.

Labels are normalized into [0.1, 1.0] before warping (the positive lower
endpoint keeps power transforms on their domain); every reported quantity
is mapped back to original units by composing the normalization into each
component's transform.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import quadrature as quad
from .errors import (
    AllWeightsDegenerate,
    BtgpError,
    InvalidParams,
    NotPositiveDefinite,
    RankDeficient,
)
from .kernels import KernelParams, cross_kernel, kernel_matrix
from .linalg import DEFAULT_JITTER, CholeskyFactor, bordered_schur_variance, cholesky
from .tmixture import PosteriorMixture, TMixtureComponent, quantile
from .transforms import Affine, Composed, Transform, TransformFamily, family

NORM_LO = 0.1
NORM_HI = 1.0
DEFAULT_LEVELS = (0.025, 0.5, 0.975)
# fallback floor for the residual when a node fits the data exactly
_Q_FLOOR = 1e-300


@dataclass(frozen=True)
class TrainingSet:
    """Observation locations, labels, covariates, and the label
    normalization installed at construction."""

    x: np.ndarray
    y: np.ndarray
    covariates: np.ndarray
    covariate_fn: Callable[[np.ndarray], np.ndarray]
    norm_shift: float
    norm_scale: float

    @classmethod
    def create(cls, x, y, covariates=None, covariate_fn=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[0] == 1 and x.shape[1] > 1 and np.asarray(y).size == x.shape[1]:
            x = x.T
        y = np.asarray(y, dtype=float).reshape(-1)
        n = x.shape[0]
        if y.shape[0] != n:
            raise InvalidParams(f"{n} locations but {y.shape[0]} labels")
        if covariates is None:
            covariates = np.ones((n, 1))
            covariate_fn = covariate_fn or (lambda pts: np.ones((np.atleast_2d(pts).shape[0], 1)))
        else:
            covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
            if covariate_fn is None:
                raise InvalidParams("custom covariates need a covariate_fn for prediction")
        span = float(y.max() - y.min())
        if span <= 0:
            raise InvalidParams("labels are constant; nothing to regress")
        scale = (NORM_HI - NORM_LO) / span
        shift = NORM_LO - scale * float(y.min())
        return cls(x=x, y=y, covariates=covariates, covariate_fn=covariate_fn,
                   norm_shift=shift, norm_scale=scale)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def dim(self):
        return self.x.shape[1]

    @property
    def p(self):
        return self.covariates.shape[1]

    @property
    def y_norm(self):
        return self.norm_shift + self.norm_scale * self.y

    @property
    def norm_transform(self):
        return Affine(self.norm_shift, self.norm_scale)

    def denormalize(self, values):
        return (np.asarray(values) - self.norm_shift) / self.norm_scale


@dataclass(frozen=True)
class FitConfig:
    """Quadrature, sparsification, and box settings for a fit."""

    quadrature: str = "qmc"                # sparse | qmc | mc
    nodes: int = 64                        # qmc/mc node count
    level: int = 3                         # sparse-grid level
    seed: int = 0                          # mc seed
    sparsify_eps: float = 0.1              # positive-weight drop budget
    keep_mass: float = 0.9                 # signed rules: kept |w| fraction
    lengthscale_box: Tuple[float, float] = (0.05, 5.0)   # log-uniform
    noise_box: Tuple[float, float] = (1e-6, 0.1)         # log-uniform
    jacobian_power: Optional[float] = None               # default 1 - p/n
    log_prior: Optional[Callable[[np.ndarray], float]] = None
    jitter_scale: float = DEFAULT_JITTER
    node_cap: int = quad.DEFAULT_NODE_CAP
    workers: int = 1


@dataclass(frozen=True)
class NodeCache:
    """Per-node factorizations and sufficient statistics."""

    params: KernelParams
    transform: Transform            # acts on normalized labels
    y_latent: np.ndarray
    log_jac: float
    k_chol: CholeskyFactor
    rx_chol: CholeskyFactor
    beta: np.ndarray
    q: float
    log_evidence: float
    jitter: float = 0.0             # absolute jitter the factor was built with
    resid_w: Optional[np.ndarray] = None   # K^-1 (Y - M beta), kept nodes only


@dataclass(frozen=True)
class BTGModel:
    """Fitted model: kept nodes, their caches, and normalized weights."""

    data: TrainingSet
    transform_family: TransformFamily
    config: FitConfig
    rule: quad.QuadratureRule
    sparsified: quad.SparsifiedRule
    log_evidences: np.ndarray           # all nodes
    tilde_weights: np.ndarray           # all nodes, sums to 1
    kept_caches: Tuple[NodeCache, ...]  # aligned with sparsified.kept_indices
    weights: np.ndarray                 # kept, renormalized to sum to 1

    @property
    def dof(self):
        return self.data.n - self.data.p

    @property
    def sparsification_eps(self):
        s = self.sparsified
        if s.eps is not None:
            return s.eps
        return max(s.eps_plus, -s.eps_minus)

    def observation_transform(self, node_transform):
        return Composed((self.data.norm_transform, node_transform))


def gls_solve(y_latent, m_x, k_chol):
    """Generalized least squares under the kernel-inverse metric.

    Returns (beta, q, rx_chol): the normal-equation solution through the
    factor of MT K^-1 M, the weighted residual norm squared, and that
    factor itself.
    """
    w = k_chol.half_solve(m_x)
    z = k_chol.half_solve(y_latent)
    try:
        rx_chol = cholesky(w.T @ w)
    except NotPositiveDefinite as exc:
        raise RankDeficient("covariates are rank deficient under K^-1") from exc
    beta = rx_chol.solve(w.T @ z)
    resid = z - w @ beta
    q = float(resid @ resid)
    return beta, q, rx_chol


def log_evidence(cache, n, p, jacobian_power=None):
    """Marginal likelihood of the data at one hyperparameter node (up to a
    node-independent constant): determinant, residual, and Jacobian terms."""
    power = (1.0 - p / n) if jacobian_power is None else jacobian_power
    return (-0.5 * cache.k_chol.log_det
            - 0.5 * cache.rx_chol.log_det
            - 0.5 * (n - p) * math.log(max(cache.q, _Q_FLOOR))
            + power * cache.log_jac)


def build_node_cache(data, params, transform, jitter_scale=DEFAULT_JITTER,
                     jacobian_power=None):
    """Factorizations, GLS solution, and evidence for one node."""
    y_norm = data.y_norm
    y_latent = np.asarray(transform.forward(y_norm), dtype=float)
    log_jac = transform.log_jacobian(y_norm)
    k = kernel_matrix(data.x, params)
    jitter = jitter_scale * float(np.mean(np.diag(k)))
    k_chol = cholesky(k, jitter=jitter)
    beta, q, rx_chol = gls_solve(y_latent, data.covariates, k_chol)
    cache = NodeCache(params=params, transform=transform, y_latent=y_latent,
                      log_jac=log_jac, k_chol=k_chol, rx_chol=rx_chol,
                      beta=beta, q=q, log_evidence=0.0, jitter=jitter)
    ev = log_evidence(cache, data.n, data.p, jacobian_power)
    return replace(cache, log_evidence=ev)


def hyperparameter_box(data, config, transform_family):
    """Box layout: log lengthscales per input dim, log noise, transform
    parameters (fixed ordering so node caches are reproducible)."""
    lo_l, hi_l = config.lengthscale_box
    lo_s, hi_s = config.noise_box
    dims = [(math.log(lo_l), math.log(hi_l))] * data.dim
    dims.append((math.log(lo_s), math.log(hi_s)))
    dims.extend(transform_family.box)
    return np.array(dims)


def decode_node(node, data, transform_family):
    """Split one node vector into kernel parameters and a transform."""
    d = data.dim
    params = KernelParams(lengthscales=np.exp(node[:d]),
                          noise_variance=float(np.exp(node[d])))
    transform = transform_family.build(tuple(node[d + 1:]))
    return params, transform


def fit(data, transform_family="I", config=None):
    """Fit a BTG model: build the quadrature rule over the hyperparameter
    box, compute per-node evidence, combine into normalized mixture
    weights, and sparsify.  Nodes with dropped weights skip all further
    (prediction-stage) work.
    """
    if isinstance(transform_family, str):
        transform_family = family(transform_family)
    config = config or FitConfig()
    if data.n <= data.p:
        raise InvalidParams(
            f"need more observations ({data.n}) than covariates ({data.p})")
    if np.linalg.matrix_rank(data.covariates) < data.p:
        raise InvalidParams("covariate matrix is rank deficient")

    box = hyperparameter_box(data, config, transform_family)
    dim = len(box)
    if config.quadrature == "sparse":
        rule = quad.sparse_grid(dim, config.level, box, node_cap=config.node_cap)
    elif config.quadrature == "qmc":
        rule = quad.qmc_rule(dim, config.nodes, box)
    elif config.quadrature == "mc":
        rule = quad.mc_rule(dim, config.nodes, box, config.seed)
    else:
        raise InvalidParams(f"unknown quadrature kind {config.quadrature!r}")

    def node_cache(i):
        params, transform = decode_node(rule.nodes[i], data, transform_family)
        try:
            return build_node_cache(data, params, transform,
                                    config.jitter_scale, config.jacobian_power)
        except BtgpError:
            return None  # unusable node (domain violation, indefinite kernel)

    indices = range(rule.n_nodes)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            caches = list(pool.map(node_cache, indices))
    else:
        caches = [node_cache(i) for i in indices]

    log_evs = np.array([c.log_evidence if c is not None else -np.inf
                        for c in caches])
    if config.log_prior is not None:
        log_evs = log_evs + np.array([config.log_prior(node) for node in rule.nodes])

    tilde = _combine_weights(rule.weights, log_evs)

    if rule.kind in ("qmc", "mc"):
        sparsified = quad.sparsify(tilde, eps=config.sparsify_eps)
    else:
        mags = np.sort(np.abs(tilde))[::-1]
        target = config.keep_mass * float(np.abs(tilde).sum())
        keep = int(np.searchsorted(np.cumsum(mags), target)) + 1
        sparsified = quad.sparsify(tilde, keep=min(keep, len(tilde)))

    kept = sparsified.kept_indices
    kept_sum = float(tilde[kept].sum())
    if kept_sum <= 0:
        raise AllWeightsDegenerate("kept mixture weights sum to a non-positive value")
    weights = tilde[kept] / kept_sum

    kept_caches = []
    for i in kept:
        cache = caches[i]
        resid = cache.y_latent - data.covariates @ cache.beta
        kept_caches.append(replace(cache, resid_w=cache.k_chol.solve(resid)))

    return BTGModel(data=data, transform_family=transform_family, config=config,
                    rule=rule, sparsified=sparsified, log_evidences=log_evs,
                    tilde_weights=tilde, kept_caches=tuple(kept_caches),
                    weights=weights)


def _combine_weights(rule_weights, log_evs, log_priors=None):
    """Signed log-sum-exp combination of quadrature weights with evidences."""
    a = np.where(np.isfinite(log_evs), log_evs, -np.inf) \
        + np.log(np.abs(rule_weights), where=rule_weights != 0,
                 out=np.full(len(rule_weights), -np.inf))
    if log_priors is not None:
        a = a + log_priors
    amax = float(np.max(a))
    if not np.isfinite(amax):
        raise AllWeightsDegenerate(
            "every node's evidence underflowed; the hyperparameter box is mis-scaled")
    t = np.sign(rule_weights) * np.exp(a - amax)
    total = float(t.sum())
    if total <= 0:
        raise AllWeightsDegenerate("combined weights sum to a non-positive value")
    return t / total


def conditional_tparams(model, cache, x_star):
    """Student-t component at a prediction point for one kept node.

    The kernel's noise term sits on the diagonal, so the variance factor
    uses k(x*, x*) = 1 + noise: the predictive law is for a new noisy
    observation at x*.
    """
    data = model.data
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    k_cross = cross_kernel(data.x, x_star, cache.params)
    m_vec = data.covariate_fn(x_star[None, :]).reshape(-1)
    loc = float(k_cross @ cache.resid_w + cache.beta @ m_vec)
    c = bordered_schur_variance(cache.k_chol, data.covariates, m_vec,
                                k_cross, 1.0 + cache.params.noise_variance)
    scale = math.sqrt(max(cache.q, _Q_FLOOR) * c / model.dof)
    return TMixtureComponent(dof=model.dof, loc=loc, scale=scale,
                             transform=model.observation_transform(cache.transform))


def posterior_mixture(model, x_star):
    """Posterior predictive mixture at a point, in original label units."""
    comps = tuple(conditional_tparams(model, cache, x_star)
                  for cache in model.kept_caches)
    return PosteriorMixture(components=comps, weights=model.weights,
                            sparsification_eps=model.sparsification_eps)


def predict(model, x_star, levels=DEFAULT_LEVELS, xtol=None, ftol=None,
            method="convex-hull"):
    """Quantiles of the posterior predictive at one point.

    Returns a dict with the median, the requested credible levels, and the
    mixture itself (evaluable as pdf/cdf in original label units).
    """
    mix = posterior_mixture(model, x_star)
    values = {p: quantile(mix, p, xtol=xtol, ftol=ftol, method=method)
              for p in levels}
    out = {"levels": values, "mixture": mix}
    if 0.5 in values:
        out["median"] = values[0.5]
    return out


def predict_batch(model, x_stars, levels=DEFAULT_LEVELS, xtol=None, ftol=None,
                  method="convex-hull"):
    """Vectorized prediction: per-node location/scale for all points at
    once, then per-point quantile solves.  Returns an array of shape
    (n_points, n_levels) in original label units."""
    data = model.data
    x_stars = np.atleast_2d(np.asarray(x_stars, dtype=float))
    m_pts = x_stars.shape[0]
    m_vecs = np.atleast_2d(data.covariate_fn(x_stars))

    locs = np.empty((len(model.kept_caches), m_pts))
    scales = np.empty_like(locs)
    for j, cache in enumerate(model.kept_caches):
        k_star = 1.0 + cache.params.noise_variance
        kc = cross_kernel(data.x, x_stars, cache.params)      # n x m
        locs[j] = kc.T @ cache.resid_w + m_vecs @ cache.beta
        u = cache.k_chol.solve(kc)                            # n x m
        h = m_vecs.T - data.covariates.T @ u                  # p x m
        z = cache.rx_chol.half_solve(h)
        c = k_star - np.sum(kc * u, axis=0) + np.sum(z * z, axis=0)
        if np.any(c <= 0):
            bad = int(np.argmin(c))
            # recompute the offending point through the guarded scalar path
            bordered_schur_variance(cache.k_chol, data.covariates,
                                    m_vecs[bad], kc[:, bad], k_star)
        scales[j] = np.sqrt(max(cache.q, _Q_FLOOR) * c / model.dof)

    out = np.empty((m_pts, len(levels)))
    for i in range(m_pts):
        comps = tuple(
            TMixtureComponent(dof=model.dof, loc=float(locs[j, i]),
                              scale=float(scales[j, i]),
                              transform=model.observation_transform(cache.transform))
            for j, cache in enumerate(model.kept_caches))
        mix = PosteriorMixture(components=comps, weights=model.weights,
                               sparsification_eps=model.sparsification_eps)
        for k, p in enumerate(levels):
            out[i, k] = quantile(mix, p, xtol=xtol, ftol=ftol, method=method)
    return out


def model_summary_rows(model):
    """Kept/dropped node table (weights, evidences) for the CLI."""
    kept = set(int(i) for i in model.sparsified.kept_indices)
    rows = []
    for i in range(model.rule.n_nodes):
        rows.append({
            "node": i,
            "kept": int(i in kept),
            "quadrature_weight": float(model.rule.weights[i]),
            "log_evidence": float(model.log_evidences[i]),
            "mixture_weight": float(model.tilde_weights[i]),
        })
    return rows
