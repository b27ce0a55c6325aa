"""Maximum-likelihood baselines: GP, warped GP, compositionally warped GP.

All three share the kernel and transform machinery; a GP is a warped GP
with the identity transform, and a compositionally warped GP optimizes a
chained transform.  Mean coefficients and the latent signal variance are
profiled analytically inside the objective (closed forms exist), so the
search runs over log lengthscales, log noise, and transform parameters
only.  Optimization is multi-start quasi-Newton with numeric gradients;
any local optimizer with the same objective-in/params-out contract can be
dropped in.

Prediction computes the latent Gaussian mean and variance at the fitted
parameters and maps quantiles back through the transform inverse, so the
reported median is the true predictive median (monotone transforms commute
with quantiles).
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from .btg import TrainingSet, gls_solve, hyperparameter_box, decode_node
from .errors import BtgpError, OptimizationFailed, RangeError
from .kernels import KernelParams, cross_kernel, kernel_matrix
from .linalg import DEFAULT_JITTER, cholesky
from .tmixture import _transform_domain, _transform_range
from .transforms import Composed, family

_BARRIER = 1e25
_NORMAL_975 = 1.959963984540054


@dataclass(frozen=True)
class MleConfig:
    starts: int = 8
    seed: int = 0
    lengthscale_box: Tuple[float, float] = (0.05, 5.0)
    noise_box: Tuple[float, float] = (1e-6, 0.1)
    jitter_scale: float = DEFAULT_JITTER
    maxiter: int = 200


@dataclass(frozen=True)
class MleModel:
    """A transform and kernel fit by maximum likelihood."""

    data: TrainingSet
    transform: object              # acts on normalized labels
    params: KernelParams
    beta: np.ndarray
    tau_inv: float                 # profiled latent signal variance q / n
    nll: float
    k_chol: object
    resid_w: np.ndarray
    trace: Tuple[Tuple[float, int], ...]   # (objective, iterations) per start

    @property
    def observation_transform(self):
        return Composed((self.data.norm_transform, self.transform))


def wgp_nll(data, transform, params, jitter_scale=DEFAULT_JITTER):
    """Negative log likelihood of the warped GP in latent space, with mean
    coefficients and signal variance profiled out analytically."""
    y_norm = data.y_norm
    y_latent = np.asarray(transform.forward(y_norm), dtype=float)
    log_jac = transform.log_jacobian(y_norm)
    k = kernel_matrix(data.x, params)
    jitter = jitter_scale * float(np.mean(np.diag(k)))
    k_chol = cholesky(k, jitter=jitter)
    _, q, _ = gls_solve(y_latent, data.covariates, k_chol)
    n = data.n
    return (0.5 * k_chol.log_det
            + 0.5 * n * math.log(max(q, 1e-300) / n)
            + 0.5 * n * (1.0 + math.log(2.0 * math.pi))
            - log_jac)


def mle_fit(data, transform_family="I", config=None):
    """Multi-start bounded quasi-Newton fit of the warped-GP likelihood.

    Start 0 is the box center; the rest are uniform draws in the box.
    Factorization failures and transform domain violations act as barrier
    values.  Raises OptimizationFailed when no start is finite.
    """
    if isinstance(transform_family, str):
        transform_family = family(transform_family)
    config = config or MleConfig()

    shim = _BoxShim(config)
    box = hyperparameter_box(data, shim, transform_family)
    rng = np.random.default_rng(config.seed)

    def objective(vec):
        try:
            params, transform = decode_node(np.asarray(vec), data, transform_family)
            return wgp_nll(data, transform, params, config.jitter_scale)
        except BtgpError:
            return _BARRIER

    starts = [0.5 * (box[:, 0] + box[:, 1])]
    for _ in range(max(0, config.starts - 1)):
        starts.append(rng.uniform(box[:, 0], box[:, 1]))

    best = None
    trace = []
    for x0 in starts:
        res = minimize(objective, x0, method="L-BFGS-B",
                       bounds=list(map(tuple, box)),
                       options={"maxiter": config.maxiter})
        trace.append((float(res.fun), int(res.nit)))
        if math.isfinite(res.fun) and res.fun < _BARRIER and \
                (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise OptimizationFailed("no optimizer start reached a finite objective")

    params, transform = decode_node(np.asarray(best.x), data, transform_family)
    y_latent = np.asarray(transform.forward(data.y_norm), dtype=float)
    k = kernel_matrix(data.x, params)
    k_chol = cholesky(k, jitter=config.jitter_scale * float(np.mean(np.diag(k))))
    beta, q, _ = gls_solve(y_latent, data.covariates, k_chol)
    resid_w = k_chol.solve(y_latent - data.covariates @ beta)
    return MleModel(data=data, transform=transform, params=params, beta=beta,
                    tau_inv=q / data.n, nll=float(best.fun), k_chol=k_chol,
                    resid_w=resid_w, trace=tuple(trace))


class _BoxShim:
    """Adapter so hyperparameter_box can read MLE config boxes."""

    def __init__(self, config):
        self.lengthscale_box = config.lengthscale_box
        self.noise_box = config.noise_box


def _latent_predict(model, x_stars):
    data = model.data
    x_stars = np.atleast_2d(np.asarray(x_stars, dtype=float))
    kc = cross_kernel(data.x, x_stars, model.params)
    m_vecs = np.atleast_2d(data.covariate_fn(x_stars))
    mean = kc.T @ model.resid_w + m_vecs @ model.beta
    u = model.k_chol.solve(kc)
    # noise sits on the kernel diagonal: predictive of a new noisy observation
    k_star = 1.0 + model.params.noise_variance
    var = model.tau_inv * np.maximum(k_star - np.sum(kc * u, axis=0), 1e-300)
    return mean, var


def _inverse_or_edge(transform, z):
    rlo, rhi = _transform_range(transform)
    dlo, dhi = _transform_domain(transform)
    if z <= rlo:
        return dlo
    if z >= rhi:
        return dhi
    return float(transform.inverse(z))


def mle_predict(model, x_star, clip=False):
    """Median and central 95% interval at one point, in original units.

    The latent interval endpoints are mean +/- 1.96 sd; out-of-range
    endpoints raise RangeError unless ``clip=True`` maps them to the
    transform's domain edge (the generalized inverse).
    """
    mean, var = _latent_predict(model, np.asarray(x_star, dtype=float)[None, :])
    sd = math.sqrt(float(var[0]))
    g = model.observation_transform
    zs = (float(mean[0]), float(mean[0]) - _NORMAL_975 * sd,
          float(mean[0]) + _NORMAL_975 * sd)
    if clip:
        median, lo, hi = (_inverse_or_edge(g, z) for z in zs)
    else:
        rlo, rhi = _transform_range(g)
        if zs[1] <= rlo or zs[2] >= rhi:
            raise RangeError("latent interval endpoint outside the transform range")
        median, lo, hi = (float(g.inverse(z)) for z in zs)
    return {"median": median, "lo": lo, "hi": hi,
            "latent_mean": float(mean[0]), "latent_var": float(var[0])}


def mle_predict_batch(model, x_stars, clip=True):
    """Vectorized median/interval prediction (rows: points)."""
    mean, var = _latent_predict(model, x_stars)
    sd = np.sqrt(var)
    g = model.observation_transform
    out = np.empty((len(mean), 3))
    for i in range(len(mean)):
        out[i, 0] = _inverse_or_edge(g, float(mean[i])) if clip \
            else float(g.inverse(float(mean[i])))
        out[i, 1] = _inverse_or_edge(g, float(mean[i] - _NORMAL_975 * sd[i])) if clip \
            else float(g.inverse(float(mean[i] - _NORMAL_975 * sd[i])))
        out[i, 2] = _inverse_or_edge(g, float(mean[i] + _NORMAL_975 * sd[i])) if clip \
            else float(g.inverse(float(mean[i] + _NORMAL_975 * sd[i])))
    return out
