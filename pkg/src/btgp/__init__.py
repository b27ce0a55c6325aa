"""Bayesian transformed Gaussian process regression.

Fully Bayesian warped-GP inference made practical: hyperparameters are
marginalized over sparse-grid/QMC quadrature rules whose weights are
sparsified with certified error budgets, predictive medians and credible
intervals come from Brent's method inside analytic quantile brackets, and
model selection uses an O(n^3) leave-one-out scheme built on rank-one
Cholesky downdates.  MLE-fit GP/WGP/CWGP baselines share the kernel and
transform machinery.
"""

from ._backend import HAVE_COMPILED
from .btg import BTGModel, FitConfig, TrainingSet, fit, posterior_mixture, predict, predict_batch
from .baselines import MleConfig, MleModel, mle_fit, mle_predict, mle_predict_batch, wgp_nll
from .kernels import KernelParams, cross_kernel, kernel_matrix
from .loocv import loocv_node, loocv_node_refit, loocv_score
from .quadrature import QuadratureRule, SparsifiedRule, mc_rule, qmc_rule, sparse_grid, sparsify
from .tmixture import PosteriorMixture, TMixtureComponent, quantile, quantile_bounds
from .transforms import Affine, ArcSinh, BoxCox, Composed, IDENTITY, SinhArcSinh, family

__version__ = "0.1.0"

__all__ = [
    "HAVE_COMPILED",
    "BTGModel", "FitConfig", "TrainingSet", "fit", "posterior_mixture",
    "predict", "predict_batch",
    "MleConfig", "MleModel", "mle_fit", "mle_predict", "mle_predict_batch",
    "wgp_nll",
    "KernelParams", "cross_kernel", "kernel_matrix",
    "loocv_node", "loocv_node_refit", "loocv_score",
    "QuadratureRule", "SparsifiedRule", "mc_rule", "qmc_rule", "sparse_grid",
    "sparsify",
    "PosteriorMixture", "TMixtureComponent", "quantile", "quantile_bounds",
    "Affine", "ArcSinh", "BoxCox", "Composed", "IDENTITY", "SinhArcSinh",
    "family",
]
