"""Compare the numba and numpy backends of the D-transform spectral sums.

    python benchmarks/bench_kernels.py [--sizes 400 2000 10000] [--points 64] [--repeat 20]

The full SVD is timed alongside for scale: at desk sizes it dominates OptShrink.
"""
import argparse
import time

import numpy as np

from optshrink import _kernels
from optshrink.linalg import sample_gaussian_matrix


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[400, 2000, 10000])
    parser.add_argument("--points", type=int, default=64, help="evaluation points per call")
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--svd", action="store_true", help="also time a full SVD at each size (slow above 2000)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'q':>7} {'points':>7} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for q in args.sizes:
        values = np.sort(rng.uniform(0, 2, q))[::-1]
        zs = 2.0 * (1.01 + rng.uniform(0, 2, args.points))
        t_np = best_of(lambda: _kernels.spectral_sums_numpy(zs, values), args.repeat)
        if _kernels.HAVE_NUMBA:
            _kernels.spectral_sums_numba(zs, values)  # compile
            t_nb = best_of(lambda: _kernels.spectral_sums_numba(zs, values), args.repeat)
            ratio = f"{t_np / t_nb:8.2f}"
        else:
            t_nb, ratio = float("nan"), "     n/a"
        print(f"{q:>7} {args.points:>7} {t_np * 1e3:11.3f} {t_nb * 1e3:11.3f} {ratio}")
        if args.svd:
            x = sample_gaussian_matrix(q, q, 1 / q, 0)
            t_svd = best_of(lambda: np.linalg.svd(x, full_matrices=False), 1)
            print(f"{'':>7} full SVD {q}x{q}: {t_svd * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
