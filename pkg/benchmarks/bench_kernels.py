"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeats 5]

Prints one line per case: backend, problem size, best-of-R seconds.
"""

import argparse
import time

import numpy as np

from rasgw import _kernels
from rasgw.gw1d import SortedProjection, gw2_1d_fast

CASES = [
    ("costs", 128, 3, 500),
    ("costs", 1024, 10, 500),
    ("grads", 128, 3, 100),
    ("grads", 1024, 10, 500),
]


def best_of(fn, repeats):
    fn()  # warm-up (jit compilation for numba)
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeats", type=int, default=5)
    args = p.parse_args()
    rng = np.random.default_rng(0)
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    print(f"{'kernel':6s} {'backend':7s} {'n':>6s} {'d':>3s} {'M':>5s} {'seconds':>10s}")
    for kind, n, d, m in CASES:
        X, Y = rng.normal(size=(n, d)), rng.normal(size=(n, d))
        th = rng.normal(size=(m, d))
        th /= np.linalg.norm(th, axis=1)[:, None]
        coef = np.full(m, 1.0 / m)
        for be in backends:
            if kind == "costs":
                fn = lambda: _kernels.sliced_costs(X, Y, th, backend=be)
            else:
                fn = lambda: _kernels.sliced_grads(X, Y, th, coef, backend=be)
            print(f"{kind:6s} {be:7s} {n:6d} {d:3d} {m:5d} {best_of(fn, args.repeats):10.5f}")
    a = SortedProjection.from_values(rng.normal(size=100_000))
    b = SortedProjection.from_values(rng.normal(size=100_000))
    print(f"gw2_1d_fast single direction n=100000: {best_of(lambda: gw2_1d_fast(a, b), args.repeats):.5f} s")


if __name__ == "__main__":
    main()
