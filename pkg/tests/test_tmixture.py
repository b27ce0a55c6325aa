"""Mixture evaluation, quantile brackets, and Brent solving against
dense-grid bisection and numerical-integration oracles."""

import numpy as np
import pytest
import scipy.integrate
import scipy.stats

from btgp.errors import InvalidLevel, NotNormalized
from btgp.studentt import t_inv
from btgp.tmixture import (
    PosteriorMixture,
    TMixtureComponent,
    quantile,
    quantile_bounds,
)
from btgp.transforms import Affine, BoxCox, IDENTITY, SinhArcSinh


def make_mixture(rng, n_comp, transform_pool=("identity", "affine", "sa")):
    comps = []
    for _ in range(n_comp):
        kind = transform_pool[int(rng.integers(len(transform_pool)))]
        if kind == "identity":
            t = IDENTITY
        elif kind == "affine":
            t = Affine(float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 2)))
        else:
            t = SinhArcSinh(float(rng.uniform(-0.5, 0.5)), float(rng.uniform(0.6, 1.8)))
        comps.append(TMixtureComponent(
            dof=int(rng.integers(3, 40)),
            loc=float(rng.normal(0, 1.5)),
            scale=float(rng.uniform(0.3, 1.5)),
            transform=t))
    w = rng.dirichlet(np.ones(n_comp))
    return PosteriorMixture(components=tuple(comps), weights=w)


def oracle_quantile(mix, p, lo=-60.0, hi=60.0, iters=200):
    """Dense bisection against the mixture cdf (independent of brackets)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mix.cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestPdf:
    def test_single_t5_at_zero(self):
        mix = PosteriorMixture(
            components=(TMixtureComponent(5, 0.0, 1.0, IDENTITY),),
            weights=np.array([1.0]))
        # direct Student-t density formula evaluation
        from math import gamma, pi, sqrt
        expect = gamma(3.0) / (gamma(2.5) * sqrt(5 * pi))
        assert mix.pdf(0.0) == pytest.approx(expect, rel=1e-12)
        assert expect == pytest.approx(0.3796, abs=5e-5)

    def test_affine_jacobian_factor(self):
        a, b = 0.4, 2.0
        base = PosteriorMixture(
            components=(TMixtureComponent(8, 0.0, 1.0, IDENTITY),),
            weights=np.array([1.0]))
        warped = PosteriorMixture(
            components=(TMixtureComponent(8, 0.0, 1.0, Affine(a, b)),),
            weights=np.array([1.0]))
        y = 0.7
        assert warped.pdf(y) == pytest.approx(b * base.pdf(a + b * y), rel=1e-12)

    def test_duplicate_components(self):
        comp = TMixtureComponent(6, 0.3, 0.8, IDENTITY)
        mix2 = PosteriorMixture(components=(comp, comp),
                                weights=np.array([0.5, 0.5]))
        mix1 = PosteriorMixture(components=(comp,), weights=np.array([1.0]))
        y = np.linspace(-3, 3, 11)
        assert np.allclose(mix2.pdf(y), mix1.pdf(y))


class TestCdf:
    def test_median_of_single_component(self):
        mix = PosteriorMixture(
            components=(TMixtureComponent(9, 1.7, 0.6, IDENTITY),),
            weights=np.array([1.0]))
        assert mix.cdf(1.7) == pytest.approx(0.5)

    def test_tail_limits(self):
        rng = np.random.default_rng(0)
        mix = make_mixture(rng, 4)
        assert mix.cdf(-1e8) == pytest.approx(0.0, abs=1e-12)
        assert mix.cdf(1e8) == pytest.approx(1.0, abs=1e-12)

    def test_cdf_matches_integrated_pdf(self):
        rng = np.random.default_rng(1)
        mix = make_mixture(rng, 5)
        for y in (-1.2, 0.3, 2.0):
            val, err = scipy.integrate.quad(mix.pdf, -200.0, y, limit=400)
            assert mix.cdf(y) == pytest.approx(val, abs=max(1e-6, 3 * err))

    def test_cdf_pdf_consistency_derivative(self):
        rng = np.random.default_rng(2)
        mix = make_mixture(rng, 4)
        ys = rng.uniform(-3, 3, 100)
        h = 1e-5
        fd = (mix.cdf(ys + h) - mix.cdf(ys - h)) / (2 * h)
        assert np.allclose(fd, mix.pdf(ys), atol=1e-5)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(NotNormalized):
            PosteriorMixture(
                components=(TMixtureComponent(5, 0.0, 1.0, IDENTITY),),
                weights=np.array([0.9]))


class TestQuantileBounds:
    def test_single_component_collapse(self):
        mix = PosteriorMixture(
            components=(TMixtureComponent(7, 0.5, 1.2, IDENTITY),),
            weights=np.array([1.0]))
        lo, hi = quantile_bounds(mix, 0.3)
        assert lo == pytest.approx(hi)

    def test_two_component_hull(self):
        s = 0.05
        comps = (TMixtureComponent(30, 0.0, s, IDENTITY),
                 TMixtureComponent(30, 1.0, s, IDENTITY))
        mix = PosteriorMixture(components=comps, weights=np.array([0.5, 0.5]))
        lo, hi = quantile_bounds(mix, 0.5)
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(1.0, abs=1e-12)
        med = oracle_quantile(mix, 0.5)
        assert lo <= med <= hi
        assert med == pytest.approx(0.5, abs=1e-6)

    @pytest.mark.parametrize("method", ["convex-hull", "singular-weight"])
    def test_bounds_contain_oracle(self, method):
        rng = np.random.default_rng(3)
        for trial in range(60):
            mix = make_mixture(rng, int(rng.integers(2, 11)))
            for p in (0.025, 0.5, 0.975):
                lo, hi = quantile_bounds(mix, p, method)
                q = oracle_quantile(mix, p)
                assert lo - 1e-9 <= q <= hi + 1e-9

    def test_invalid_level(self):
        rng = np.random.default_rng(4)
        mix = make_mixture(rng, 3)
        with pytest.raises(InvalidLevel):
            quantile_bounds(mix, 1.5)

    def test_singular_weight_falls_back_to_hull(self):
        # with many comparable weights no component admits the level shift
        rng = np.random.default_rng(5)
        mix = make_mixture(rng, 8)
        lo_h, hi_h = quantile_bounds(mix, 0.5, "convex-hull")
        lo_s, hi_s = quantile_bounds(mix, 0.5, "singular-weight")
        assert lo_s == pytest.approx(lo_h)
        assert hi_s == pytest.approx(hi_h)


class TestQuantile:
    def test_single_component_median_exact(self):
        mix = PosteriorMixture(
            components=(TMixtureComponent(12, 0.8, 0.5, IDENTITY),),
            weights=np.array([1.0]))
        assert quantile(mix, 0.5) == pytest.approx(0.8, abs=1e-12)

    def test_log_t_median_maps_through_exp(self):
        # Box-Cox at zero exponent is the log warp, so the observation-space
        # median is exp of the latent location
        mix = PosteriorMixture(
            components=(TMixtureComponent(20, -0.5, 0.4, BoxCox(0.0)),),
            weights=np.array([1.0]))
        assert quantile(mix, 0.5) == pytest.approx(np.exp(-0.5), rel=1e-10)

    def test_matches_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            mix = make_mixture(rng, 8)
            got = quantile(mix, 0.975, ftol=1e-9, xtol=1e-11)
            assert got == pytest.approx(oracle_quantile(mix, 0.975), abs=1e-5)

    def test_monotone_invariance_under_shared_warp(self):
        rng = np.random.default_rng(7)
        comps = tuple(TMixtureComponent(10, float(rng.normal()), 0.7, IDENTITY)
                      for _ in range(4))
        w = rng.dirichlet(np.ones(4))
        latent = PosteriorMixture(components=comps, weights=w)
        g = SinhArcSinh(0.4, 1.3)
        warped = PosteriorMixture(
            components=tuple(
                TMixtureComponent(c.dof, c.loc, c.scale, g) for c in comps),
            weights=w)
        for p in (0.1, 0.5, 0.9):
            q_lat = quantile(latent, p, ftol=1e-10, xtol=1e-12)
            q_obs = quantile(warped, p, ftol=1e-10, xtol=1e-12)
            assert q_obs == pytest.approx(g.inverse(q_lat), rel=1e-6, abs=1e-7)

    def test_component_order_invariance(self):
        rng = np.random.default_rng(8)
        mix = make_mixture(rng, 6)
        perm = rng.permutation(6)
        shuffled = PosteriorMixture(
            components=tuple(mix.components[i] for i in perm),
            weights=mix.weights[perm])
        assert quantile(shuffled, 0.5) == pytest.approx(quantile(mix, 0.5), abs=1e-9)

    def test_signed_weights_solvable(self):
        comps = (TMixtureComponent(15, -1.0, 0.8, IDENTITY),
                 TMixtureComponent(15, 0.5, 0.6, IDENTITY),
                 TMixtureComponent(15, 1.5, 0.9, IDENTITY))
        w = np.array([0.7, 0.5, -0.2])
        mix = PosteriorMixture(components=comps, weights=w)
        q = quantile(mix, 0.5, ftol=1e-8)
        assert mix.cdf(q) == pytest.approx(0.5, abs=1e-6)

    def test_bounded_uses_fewer_evals_than_unbounded(self):
        # one case = a full median + credible-interval solve on a mixture
        # living wherever the labels live (offset observation space)
        rng = np.random.default_rng(9)
        wins = 0
        for _ in range(50):
            base = make_mixture(rng, 6)
            shift = float(rng.uniform(-5, 5))
            mix = PosteriorMixture(
                components=tuple(
                    TMixtureComponent(c.dof, c.loc + shift, c.scale, c.transform)
                    for c in base.components),
                weights=base.weights)
            n_b = n_f = 0
            for p in (0.025, 0.5, 0.975):
                bounded = quantile(mix, p, ftol=1e-6, method="convex-hull",
                                   return_info=True)
                free = quantile(mix, p, ftol=1e-6, method=None, return_info=True)
                assert bounded.value == pytest.approx(free.value, abs=1e-4)
                n_b += bounded.n_evals
                n_f += free.n_evals
            wins += n_b < n_f
        assert wins >= 45

    def test_ftol_default_follows_sparsification(self):
        rng = np.random.default_rng(10)
        base = make_mixture(rng, 5)
        tol_mix = PosteriorMixture(components=base.components,
                                   weights=base.weights,
                                   sparsification_eps=0.05)
        # a loose ftol stops earlier or equal, never later
        loose = quantile(tol_mix, 0.5, return_info=True)
        tight = quantile(base, 0.5, return_info=True)
        assert loose.n_evals <= tight.n_evals
