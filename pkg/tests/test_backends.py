"""Parity between the compiled core and the pure-Python fallback, plus
accuracy of the Student-t machinery against scipy oracles."""

import numpy as np
import pytest
import scipy.special
import scipy.stats

from btgp._backend import HAVE_COMPILED, get_core

CORES = [get_core(False)] + ([get_core(True)] if HAVE_COMPILED else [])
IDS = ["python", "compiled"][: len(CORES)]


def test_compiled_core_present():
    # the build ships the extension; the fallback is for source trees
    assert HAVE_COMPILED


@pytest.mark.parametrize("core", CORES, ids=IDS)
class TestCore:
    def test_chol_factor(self, core):
        rng = np.random.default_rng(0)
        g = rng.normal(size=(15, 15))
        a = g.T @ g + 3 * np.eye(15)
        work = np.array(a, order="C")
        assert core.chol_factor(work) == -1
        assert np.allclose(work.T @ work, a, rtol=1e-12)
        assert np.allclose(work, np.triu(work))

    def test_chol_factor_failure_index(self, core):
        a = np.array([[1.0, 0.0], [0.0, -1.0]], order="C")
        assert core.chol_factor(a) == 1

    def test_chol_downdate(self, core):
        rng = np.random.default_rng(1)
        g = rng.normal(size=(8, 8))
        a = g.T @ g + 4 * np.eye(8)
        r = np.linalg.cholesky(a).T.copy(order="C")
        v = 0.3 * rng.normal(size=8)
        assert core.chol_downdate(r, v.copy()) == -1
        assert np.allclose(r.T @ r, a - np.outer(v, v), rtol=1e-10, atol=1e-12)

    def test_chol_downdate_failure(self, core):
        r = np.eye(3, order="C")
        assert core.chol_downdate(r, np.array([2.0, 0.0, 0.0])) == 0

    def test_betainc_vs_scipy(self, core):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a = float(rng.uniform(0.3, 60.0))
            b = float(rng.uniform(0.3, 60.0))
            x = float(rng.uniform(0.0, 1.0))
            assert core.betainc(a, b, x) == pytest.approx(
                scipy.special.betainc(a, b, x), abs=1e-12)

    def test_betainc_edges(self, core):
        assert core.betainc(2.0, 3.0, 0.0) == 0.0
        assert core.betainc(2.0, 3.0, 1.0) == 1.0

    @pytest.mark.parametrize("dof", [1.0, 2.0, 3.0, 7.0, 50.0, 399.0])
    def test_t_cdf_vs_scipy(self, core, dof):
        x = np.linspace(-10, 10, 101)
        out = np.empty_like(x)
        core.t_cdf(x, dof, out)
        assert np.allclose(out, scipy.stats.t.cdf(x, dof), atol=1e-12)

    @pytest.mark.parametrize("dof", [1.0, 2.0, 5.0, 29.0, 200.0])
    def test_t_logpdf_vs_scipy(self, core, dof):
        x = np.linspace(-8, 8, 41)
        out = np.empty_like(x)
        core.t_logpdf(x, dof, out)
        assert np.allclose(out, scipy.stats.t.logpdf(x, dof), atol=1e-12)

    @pytest.mark.parametrize("dof", [1.0, 2.0, 3.0, 11.0, 50.0, 399.0])
    def test_t_inv_vs_scipy(self, core, dof):
        p = np.array([1e-5, 1e-3, 0.025, 0.2, 0.5, 0.8, 0.975, 1 - 1e-3, 1 - 1e-5])
        out = np.empty_like(p)
        core.t_inv(p, dof, out)
        expect = scipy.stats.t.ppf(p, dof)
        assert np.allclose(out, expect, rtol=1e-9, atol=1e-10)

    def test_t_inv_round_trip(self, core):
        p = np.linspace(0.01, 0.99, 33)
        q = np.empty_like(p)
        core.t_inv(p, 7.0, q)
        back = np.empty_like(q)
        core.t_cdf(q, 7.0, back)
        assert np.allclose(back, p, atol=1e-12)


@pytest.mark.skipif(not HAVE_COMPILED, reason="extension not built")
class TestCrossBackendAgreement:
    def test_chol_bitwise_close(self):
        rng = np.random.default_rng(3)
        g = rng.normal(size=(25, 25))
        a = g.T @ g + 2 * np.eye(25)
        w1 = np.array(a, order="C")
        w2 = np.array(a, order="C")
        get_core(True).chol_factor(w1)
        get_core(False).chol_factor(w2)
        assert np.allclose(w1, w2, rtol=1e-14, atol=1e-15)

    def test_t_functions_agree(self):
        x = np.linspace(-6, 6, 201)
        for dof in (1.0, 4.0, 37.0):
            a = np.empty_like(x)
            b = np.empty_like(x)
            get_core(True).t_cdf(x, dof, a)
            get_core(False).t_cdf(x, dof, b)
            assert np.allclose(a, b, atol=5e-16)

    def test_t_inv_agree(self):
        p = np.linspace(0.001, 0.999, 97)
        a = np.empty_like(p)
        b = np.empty_like(p)
        get_core(True).t_inv(p, 13.0, a)
        get_core(False).t_inv(p, 13.0, b)
        assert np.allclose(a, b, rtol=1e-12)
