"""Benchmark: compiled extension core vs pure-Python fallback.

Times the hot kernels (Cholesky factorization, rank-one downdate,
Student-t cdf and inverse cdf) and an end-to-end fast-LOOCV pass under
each backend, and checks that the two backends agree numerically.

Run from the repository root:

    python3 benchmarks/backends.py
"""

import time

import numpy as np

import btgp._backend as backend
from btgp._backend import get_core


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_core(core):
    rng = np.random.default_rng(0)
    out = {}

    g = rng.normal(size=(200, 200))
    a = g.T @ g + 5 * np.eye(200)
    out["cholesky n=200"] = timeit(lambda: core.chol_factor(np.array(a, order="C")))

    r = np.linalg.cholesky(a).T.copy(order="C")
    v = 0.1 * rng.normal(size=200)

    def downdate():
        core.chol_downdate(r.copy(order="C"), v.copy())

    out["downdate n=200"] = timeit(downdate)

    x = rng.normal(size=100_000)
    buf = np.empty_like(x)
    out["t_cdf 1e5 points"] = timeit(lambda: core.t_cdf(x, 29.0, buf))

    p = rng.uniform(0.001, 0.999, 10_000)
    buf_p = np.empty_like(p)
    out["t_inv 1e4 points"] = timeit(lambda: core.t_inv(p, 29.0, buf_p))
    return out


def bench_loocv(compiled):
    from btgp import TrainingSet
    from btgp.btg import build_node_cache
    from btgp.kernels import KernelParams
    from btgp.loocv import loocv_node
    from btgp.transforms import IDENTITY

    previous = backend.core
    backend.core = get_core(compiled)
    try:
        rng = np.random.default_rng(1)
        n = 200
        x = rng.uniform(-3, 3, size=(n, 2))
        y = np.sin(x[:, 0]) + 0.05 * rng.normal(size=n) + 2.0
        data = TrainingSet.create(x, y)
        cache = build_node_cache(data, KernelParams(np.array([0.8, 0.9]), 1e-3),
                                 IDENTITY)
        loocv_node(cache, data)  # warm-up
        return timeit(lambda: loocv_node(cache, data), repeat=3)
    finally:
        backend.core = previous


def check_parity():
    rng = np.random.default_rng(2)
    compiled = get_core(True)
    python = get_core(False)
    x = np.linspace(-8, 8, 1001)
    a = np.empty_like(x)
    b = np.empty_like(x)
    compiled.t_cdf(x, 17.0, a)
    python.t_cdf(x, 17.0, b)
    g = rng.normal(size=(50, 50))
    spd = g.T @ g + 3 * np.eye(50)
    w1 = np.array(spd, order="C")
    w2 = np.array(spd, order="C")
    compiled.chol_factor(w1)
    python.chol_factor(w2)
    return max(float(np.max(np.abs(a - b))),
               float(np.max(np.abs(w1 - w2))))


def main():
    try:
        get_core(True)
    except ImportError:
        print("compiled core is not built; run pip install -e . first")
        return 1

    print(f"backend parity: max deviation {check_parity():.2e}\n")
    results = {}
    for compiled, label in ((True, "compiled"), (False, "python")):
        results[label] = bench_core(get_core(compiled))
        results[label]["fast LOOCV n=200"] = bench_loocv(compiled)

    width = max(len(k) for k in results["compiled"])
    print(f"{'kernel':<{width}}  {'compiled':>10}  {'python':>10}  {'speedup':>8}")
    for key in results["compiled"]:
        c = results["compiled"][key]
        p = results["python"][key]
        print(f"{key:<{width}}  {c * 1e3:>8.2f}ms  {p * 1e3:>8.2f}ms  {p / c:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
