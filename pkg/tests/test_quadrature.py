"""Quadrature rules: exactness, determinism, and sparsification budgets."""

import itertools

import numpy as np
import pytest

from btgp.errors import EpsilonTooLarge, NotNormalized, ResourceLimit
from btgp.quadrature import mc_rule, qmc_rule, sparse_grid, sparsify


def integrate(rule, f):
    return float(np.sum(rule.weights * f(rule.nodes)))


class TestSparseGrid:
    def test_1d_reduces_to_base_rule(self):
        rule = sparse_grid(1, 3, [(0.0, 2.0)])
        assert rule.n_nodes == 5
        assert integrate(rule, lambda x: np.ones(len(x))) == pytest.approx(2.0)

    def test_2d_linear_integrand(self):
        rule = sparse_grid(2, 3, [(0, 1), (0, 1)])
        got = integrate(rule, lambda x: x[:, 0] + x[:, 1])
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_3d_random_cubic_polynomial(self):
        rng = np.random.default_rng(0)
        rule = sparse_grid(3, 4, [(0, 1)] * 3)
        coeffs = {alpha: rng.normal() for alpha in
                  itertools.product(range(4), repeat=3) if sum(alpha) <= 3}

        def poly(x):
            out = np.zeros(len(x))
            for alpha, c in coeffs.items():
                out += c * np.prod(x ** np.array(alpha), axis=1)
            return out

        expect = sum(c * np.prod([1.0 / (a + 1) for a in alpha])
                     for alpha, c in coeffs.items())
        assert integrate(rule, poly) == pytest.approx(expect, abs=1e-10)

    def test_weights_sum_to_box_volume(self):
        box = [(-1.0, 2.0), (0.5, 3.5)]
        rule = sparse_grid(2, 4, box)
        assert float(rule.weights.sum()) == pytest.approx(9.0, rel=1e-10)

    def test_negative_weights_appear(self):
        rule = sparse_grid(2, 3, [(0, 1)] * 2)
        assert np.any(rule.weights < 0)

    def test_deterministic(self):
        a = sparse_grid(3, 3, [(0, 1)] * 3)
        b = sparse_grid(3, 3, [(0, 1)] * 3)
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.weights, b.weights)

    def test_node_cap(self):
        with pytest.raises(ResourceLimit):
            sparse_grid(8, 6, [(0, 1)] * 8, node_cap=1000)

    def test_nodes_inside_box(self):
        box = [(-2.0, -1.0), (3.0, 7.0)]
        rule = sparse_grid(2, 4, box)
        assert np.all(rule.nodes[:, 0] >= -2) and np.all(rule.nodes[:, 0] <= -1)
        assert np.all(rule.nodes[:, 1] >= 3) and np.all(rule.nodes[:, 1] <= 7)


class TestQmcMc:
    def test_single_node(self):
        rule = qmc_rule(2, 1, [(0, 1)] * 2)
        assert rule.n_nodes == 1
        assert rule.weights[0] == pytest.approx(1.0)

    def test_qmc_product_integrand(self):
        rule = qmc_rule(2, 1024, [(0, 1)] * 2)
        got = integrate(rule, lambda x: x[:, 0] * x[:, 1])
        assert abs(got - 0.25) <= 5e-3

    def test_qmc_deterministic(self):
        a = qmc_rule(3, 64, [(0, 1)] * 3)
        b = qmc_rule(3, 64, [(0, 1)] * 3)
        assert np.array_equal(a.nodes, b.nodes)

    def test_mc_seed_reproducibility(self):
        a = mc_rule(2, 50, [(0, 1)] * 2, seed=7)
        b = mc_rule(2, 50, [(0, 1)] * 2, seed=7)
        c = mc_rule(2, 50, [(0, 1)] * 2, seed=8)
        assert np.array_equal(a.nodes, b.nodes)
        assert not np.array_equal(a.nodes, c.nodes)

    def test_uniform_weights(self):
        for rule in (qmc_rule(2, 17, [(0, 1)] * 2),
                     mc_rule(2, 17, [(0, 1)] * 2, seed=0)):
            assert np.allclose(rule.weights, 1.0 / 17)


class TestSparsify:
    def test_documented_case(self):
        out = sparsify(np.array([0.7, 0.2, 0.1]), eps=0.15)
        assert out.n_kept == 2
        assert out.c == pytest.approx(0.9)
        assert list(out.kept_indices) == [0, 1]

    def test_eps_zero_keeps_all(self):
        m = 10
        out = sparsify(np.full(m, 1.0 / m), eps=0.0)
        assert out.n_kept == m
        assert out.c == pytest.approx(1.0)

    def test_eps_too_large(self):
        with pytest.raises(EpsilonTooLarge):
            sparsify(np.array([0.5, 0.5]), eps=1.0)

    def test_not_normalized(self):
        with pytest.raises(NotNormalized):
            sparsify(np.array([0.5, 0.6]), eps=0.1)

    def test_negative_weights_rejected_in_positive_mode(self):
        with pytest.raises(NotNormalized):
            sparsify(np.array([1.2, -0.2]), eps=0.1)

    def test_minimal_k(self):
        w = np.array([0.4, 0.3, 0.2, 0.1])
        out = sparsify(w, eps=0.25)
        # 0.4 < 0.75 <= 0.4+0.3+0.2
        assert out.n_kept == 3

    def test_signed_cut_count(self):
        rng = np.random.default_rng(1)
        rule = sparse_grid(2, 4, [(0, 1)] * 2)
        w = rule.weights / rule.weights.sum()
        m_keep = len(w) // 4
        out = sparsify(w, keep=m_keep)
        assert out.n_kept == m_keep
        order = np.argsort(-np.abs(w), kind="stable")
        dropped = w[order[m_keep:]]
        assert out.eps_minus == pytest.approx(dropped[dropped < 0].sum())
        assert out.eps_plus == pytest.approx(dropped[dropped > 0].sum())
        assert out.eps_minus <= 0 <= out.eps_plus

    def test_signed_threshold(self):
        w = np.array([0.6, -0.3, 0.5, 0.2])
        out = sparsify(w, threshold=0.3)
        assert out.n_kept == 3
        assert out.eps_plus == pytest.approx(0.2)
        assert out.eps_minus == 0.0
