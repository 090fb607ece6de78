"""Compare the compiled and pure-Python transport kernels.

    python benchmarks/bench_transport.py [--sizes 8,16,32,64,128] [--repeats 5]

For each ensemble size, random weighted ensembles are solved by both
network-simplex kernels (and both monotone couplings). The script checks the
two kernels return the same plan and prints median wall times per solve.
"""
import argparse
import statistics
import sys
import time

import numpy as np

from hetpf import _transport_py
from hetpf.transport import SIMPLEX_TOL, squared_distance_cost

try:
    from hetpf import _transport_cy
except ImportError:
    sys.exit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")


def instance(rng, m, dim=3):
    z = rng.standard_normal((dim, m))
    w = rng.dirichlet(np.ones(m))
    cost = squared_distance_cost(z)
    return cost, w * m, np.ones(m), SIMPLEX_TOL * cost.max()


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t0, out


def bench(sizes, repeats, seed):
    rng = np.random.default_rng(seed)
    print(f"{'M':>5} {'kernel':>10} {'python ms':>11} {'cython ms':>11} {'speedup':>8}")
    for m in sizes:
        t_py, t_cy, s_py, s_cy = [], [], [], []
        for _ in range(repeats):
            cost, supply, demand, tol = instance(rng, m)
            budget = 50 * m * m + 1000
            a_t, a = timed(_transport_py.network_simplex, cost, supply, demand, tol, budget)
            b_t, b = timed(_transport_cy.network_simplex, cost, supply, demand, tol, budget)
            if not np.array_equal(a[0], b[0]):
                raise AssertionError(f"kernels disagree at M={m}")
            t_py.append(a_t)
            t_cy.append(b_t)
            order = np.argsort(rng.standard_normal(m))
            a_t, a = timed(_transport_py.monotone_coupling, supply[order], demand)
            b_t, b = timed(_transport_cy.monotone_coupling, supply[order], demand)
            if not all(np.array_equal(x, y) for x, y in zip(a, b)):
                raise AssertionError(f"monotone couplings disagree at M={m}")
            s_py.append(a_t)
            s_cy.append(b_t)
        for name, p, c in (("simplex", t_py, t_cy), ("monotone", s_py, s_cy)):
            p_ms, c_ms = 1e3 * statistics.median(p), 1e3 * statistics.median(c)
            print(f"{m:>5} {name:>10} {p_ms:>11.3f} {c_ms:>11.3f} {p_ms / c_ms:>7.1f}x")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="8,16,32,64,128")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    bench([int(s) for s in args.sizes.split(",")], args.repeats, args.seed)


if __name__ == "__main__":
    main()
