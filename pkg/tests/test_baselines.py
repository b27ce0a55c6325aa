"""MLE baselines: objective values against dense oracles, fitting on
synthetic draws, and prediction contracts."""

import numpy as np
import pytest

from btgp import TrainingSet
from btgp.baselines import MleConfig, mle_fit, mle_predict, mle_predict_batch, wgp_nll
from btgp.errors import InvalidParams
from btgp.kernels import KernelParams, kernel_matrix
from btgp.transforms import Affine, BoxCox, IDENTITY, family


def toy_data(rng, n=12, d=1):
    x = rng.uniform(-2, 2, size=(n, d))
    y = np.sin(1.5 * x[:, 0]) + 0.1 * rng.normal(size=n) + 2.0
    return TrainingSet.create(x, y)


def dense_nll(data, transform, params):
    """Same objective assembled with explicit inverses."""
    y = np.asarray(transform.forward(data.y_norm))
    k = kernel_matrix(data.x, params)
    k = k + 1e-8 * np.mean(np.diag(k)) * np.eye(data.n)
    kinv = np.linalg.inv(k)
    m = data.covariates
    beta = np.linalg.solve(m.T @ kinv @ m, m.T @ kinv @ y)
    r = y - m @ beta
    q = float(r @ kinv @ r)
    n = data.n
    log_jac = float(np.sum(np.log(transform.derivative(data.y_norm))))
    return (0.5 * np.linalg.slogdet(k)[1] + 0.5 * n * np.log(q / n)
            + 0.5 * n * (1 + np.log(2 * np.pi)) - log_jac)


class TestWgpNll:
    def test_identity_reduces_to_gp(self):
        rng = np.random.default_rng(0)
        data = toy_data(rng)
        kp = KernelParams(np.array([0.8]), 0.01)
        a = wgp_nll(data, IDENTITY, kp)
        b = wgp_nll(data, Affine(0.0, 1.0), kp)
        assert a == pytest.approx(b, abs=1e-12)

    def test_affine_changes_objective_by_jacobian_only(self):
        # warping with an affine map equals pre-scaling the labels with an
        # identity warp, except for the Jacobian term: delta = n log b
        rng = np.random.default_rng(1)
        data = toy_data(rng)
        kp = KernelParams(np.array([0.8]), 0.01)
        a_, b_ = 0.3, 1.7
        v_affine = wgp_nll(data, Affine(a_, b_), kp)
        scaled = TrainingSet(
            x=data.x, y=data.y, covariates=data.covariates,
            covariate_fn=data.covariate_fn,
            norm_shift=a_ + b_ * data.norm_shift,
            norm_scale=b_ * data.norm_scale)  # labels pre-scaled in latent space
        v_identity = wgp_nll(scaled, IDENTITY, kp)
        assert v_affine - v_identity == pytest.approx(-data.n * np.log(b_), rel=1e-9)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(2)
        data = toy_data(rng, n=9)
        kp = KernelParams(np.array([0.6]), 0.05)
        for t in (IDENTITY, BoxCox(0.7), family("L-SA").build([0.2, 1.3, -0.1, 0.9])):
            assert wgp_nll(data, t, kp) == pytest.approx(
                dense_nll(data, t, kp), rel=1e-9)


class TestMleFit:
    def test_lengthscale_recovery(self):
        rng = np.random.default_rng(3)
        n, ls_true = 100, 0.7
        x = np.sort(rng.uniform(-3, 3, n))[:, None]
        k = kernel_matrix(x, KernelParams(np.array([ls_true]), 0.0))
        f = np.linalg.cholesky(k + 1e-10 * np.eye(n)) @ rng.normal(size=n)
        y = f + 0.05 * rng.normal(size=n)
        data = TrainingSet.create(x, y)
        model = mle_fit(data, "I", MleConfig(starts=4, seed=0))
        assert abs(np.log(model.params.lengthscales[0]) - np.log(ls_true)) <= 0.5

    def test_warped_data_prefers_warp(self):
        # log-normal-ish data: a Box-Cox warp should beat the identity GP
        rng = np.random.default_rng(4)
        n = 60
        x = np.sort(rng.uniform(-2, 2, n))[:, None]
        k = kernel_matrix(x, KernelParams(np.array([0.8]), 0.0))
        latent = np.linalg.cholesky(k + 1e-10 * np.eye(n)) @ rng.normal(size=n)
        y = np.exp(1.5 * latent)
        data = TrainingSet.create(x, y)
        gp = mle_fit(data, "I", MleConfig(starts=4, seed=0))
        wgp = mle_fit(data, "BC", MleConfig(starts=6, seed=0))
        assert wgp.nll < gp.nll

    def test_constant_labels_rejected(self):
        with pytest.raises(InvalidParams):
            TrainingSet.create(np.arange(6.0)[:, None], np.full(6, 3.3))

    def test_final_objective_not_worse_than_center_start(self):
        rng = np.random.default_rng(5)
        data = toy_data(rng)
        model = mle_fit(data, "SA", MleConfig(starts=3, seed=1))
        assert model.nll <= min(t[0] for t in model.trace) + 1e-9
        assert len(model.trace) == 3

    def test_fitted_params_inside_boxes(self):
        rng = np.random.default_rng(6)
        data = toy_data(rng)
        cfg = MleConfig(starts=3, seed=2)
        model = mle_fit(data, "SA", cfg)
        ls = model.params.lengthscales[0]
        assert cfg.lengthscale_box[0] - 1e-12 <= ls <= cfg.lengthscale_box[1] + 1e-12
        a, b = model.transform.params
        assert -1 - 1e-12 <= a <= 1 + 1e-12
        assert 0.1 - 1e-12 <= b <= 3 + 1e-12


class TestMlePredict:
    def test_identity_is_plain_gp(self):
        rng = np.random.default_rng(7)
        data = toy_data(rng)
        model = mle_fit(data, "I", MleConfig(starts=2, seed=0))
        out = mle_predict(model, np.array([0.3]))
        # dense GP predictive oracle at the fitted parameters
        k = kernel_matrix(data.x, model.params)
        k = k + 1e-8 * np.mean(np.diag(k)) * np.eye(data.n)
        kinv = np.linalg.inv(k)
        from btgp.kernels import cross_kernel
        kx = cross_kernel(data.x, np.array([0.3]), model.params)
        y = np.asarray(model.transform.forward(data.y_norm))
        m = data.covariates
        beta = np.linalg.solve(m.T @ kinv @ m, m.T @ kinv @ y)
        mu = float(kx @ kinv @ (y - m @ beta) + beta[0])
        expect_median = data.denormalize(mu)
        assert out["median"] == pytest.approx(float(expect_median), rel=1e-8)

    def test_interpolation_at_training_point(self):
        rng = np.random.default_rng(8)
        x = np.linspace(-2, 2, 10)[:, None]
        y = np.sin(x[:, 0]) + 2.0
        data = TrainingSet.create(x, y)
        model = mle_fit(data, "I", MleConfig(starts=2, seed=0,
                                             noise_box=(1e-9, 1e-8)))
        out = mle_predict(model, x[4])
        assert out["median"] == pytest.approx(y[4], abs=1e-3)

    def test_median_is_half_quantile_of_warped_gaussian(self):
        # the median must commute with the monotone warp: invert the
        # latent cdf numerically and compare
        rng = np.random.default_rng(9)
        data = toy_data(rng)
        model = mle_fit(data, "BC", MleConfig(starts=3, seed=3))
        x_star = np.array([0.45])
        out = mle_predict(model, x_star)
        from scipy.stats import norm
        g = model.observation_transform
        lo, hi = out["median"] - 2.0, out["median"] + 2.0
        mu, var = out["latent_mean"], out["latent_var"]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if norm.cdf((np.asarray(g.forward(mid)) - mu) / np.sqrt(var)) < 0.5:
                lo = mid
            else:
                hi = mid
        assert out["median"] == pytest.approx(0.5 * (lo + hi), abs=1e-8)

    def test_gp_equals_wgp_identity(self):
        rng = np.random.default_rng(10)
        data = toy_data(rng)
        a = mle_fit(data, "I", MleConfig(starts=3, seed=5))
        xs = rng.uniform(-2, 2, size=(5, 1))
        pa = mle_predict_batch(a, xs)
        # identity-family refit with the same seed finds the same optimum
        b = mle_fit(data, "I", MleConfig(starts=3, seed=5))
        pb = mle_predict_batch(b, xs)
        assert np.allclose(pa, pb, atol=1e-12)

    def test_interval_ordering(self):
        rng = np.random.default_rng(11)
        data = toy_data(rng)
        model = mle_fit(data, "SA", MleConfig(starts=3, seed=6))
        out = mle_predict_batch(model, rng.uniform(-2, 2, size=(6, 1)))
        assert np.all(out[:, 1] <= out[:, 0])
        assert np.all(out[:, 0] <= out[:, 2])
