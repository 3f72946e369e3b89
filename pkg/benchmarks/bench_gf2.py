"""Compare the compiled and pure-Python elimination kernels.

    python benchmarks/bench_gf2.py [--sizes 64 256 1024] [--repeat 3]
"""

import argparse
import random
import time

from zeroless import _gf2py

try:
    from zeroless import _gf2kernel
except ImportError:
    _gf2kernel = None


def random_rows(nrows, ncols, density, rng):
    rows = []
    for _ in range(nrows):
        r = 0
        for j in range(ncols):
            if rng.random() < density:
                r |= 1 << j
        rows.append(r)
    return rows


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 256, 1024])
    ap.add_argument("--density", type=float, default=0.5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    print(f"{'size':>6} {'python_s':>10} {'cython_s':>10} {'speedup':>8}")
    for n in args.sizes:
        rows = random_rows(n, n, args.density, rng)
        py = best_of(lambda: _gf2py.rref(list(rows), n), args.repeat)
        if _gf2kernel is None:
            print(f"{n:>6} {py:>10.4f} {'n/a':>10} {'n/a':>8}")
            continue
        assert _gf2kernel.rref(list(rows), n) == _gf2py.rref(list(rows), n)
        cy = best_of(lambda: _gf2kernel.rref(list(rows), n), args.repeat)
        print(f"{n:>6} {py:>10.4f} {cy:>10.4f} {py / cy:>8.1f}")


if __name__ == "__main__":
    main()
