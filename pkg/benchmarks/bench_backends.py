"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_backends.py [--n 20000] [--repeat 3]

Prints one row per kernel: calls per run, best time per call for each backend,
and the speedup.  Both backends are checked to agree before timing.
"""

import argparse
import math
import time

import numpy as np

from anytime_cs.kernels import backend_module


def best_time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n):
    rng = np.random.default_rng(0)
    a = rng.uniform(0.5, 50, n)
    x = rng.uniform(0, 60, n)
    s = rng.uniform(0, 30, n)
    v = np.logspace(-1, 6, n)
    vs = np.logspace(-1, 6, max(n // 20, 10))

    def loop(name):
        def run(mod):
            f = getattr(mod, name)
            for ai, xi in zip(a, x):
                f(float(ai), float(xi))
        return run

    def mix(kind, p):
        def run(mod):
            mod.log_mixture_batch(kind, *p, s, v, np.empty(n))
        return run

    def root(kind, p, bbar):
        def run(mod):
            mod.mixture_root_batch(kind, *p, vs, math.log(20.0), bbar, np.empty(vs.size))
        return run

    def bb(mod):
        for i in range(max(n // 1000, 5)):
            mod.betabinom_interval(300.0 + i, 1000.0, 0.0, 1.0, 60.0, 1, 0, math.log(20.0), 0.0, 512)

    return [
        ("reg_lower_inc_gamma", n, loop("reg_lower_inc_gamma")),
        ("log_mixture normal1", n, mix(1, (1.0, 0.0, 0.0))),
        ("log_mixture betabinom2", n, mix(2, (0.3, 0.7, 1.0))),
        ("log_mixture gammaexp", n, mix(4, (10.0, 1.0, 0.0))),
        ("log_mixture gammapoisson", n, mix(5, (10.0, 1.0, 0.0))),
        ("root gammaexp", vs.size, root(4, (10.0, 1.0, 0.0), math.inf)),
        ("root betabinom1", vs.size, root(3, (0.3, 0.7, 1.0), 1 / 0.3)),
        ("betabinom_interval", max(n // 1000, 5), bb),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    try:
        fast = backend_module("compiled")
    except ImportError:
        raise SystemExit("compiled extension is not built; reinstall with Cython available")
    slow = backend_module("python")

    out = np.empty(3)
    vv = np.array([1.0, 100.0, 1e4])
    for kind, p in [(4, (10.0, 1.0, 0.0)), (2, (0.3, 0.7, 1.0))]:
        ref = np.empty(3)
        fast.mixture_root_batch(kind, *p, vv, math.log(20.0), math.inf if kind == 4 else 1 / 0.3, out)
        slow.mixture_root_batch(kind, *p, vv, math.log(20.0), math.inf if kind == 4 else 1 / 0.3, ref)
        assert np.allclose(out, ref, rtol=1e-8), (kind, out, ref)

    print(f"{'kernel':<26}{'calls':>8}{'compiled us':>14}{'python us':>12}{'speedup':>10}")
    for name, calls, run in cases(args.n):
        tc = best_time(lambda: run(fast), args.repeat) / calls * 1e6
        tp = best_time(lambda: run(slow), args.repeat) / calls * 1e6
        print(f"{name:<26}{calls:>8}{tc:>14.3f}{tp:>12.3f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
