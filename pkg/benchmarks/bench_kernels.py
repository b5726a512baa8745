"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--sizes 4 16 64] [--repeat 5]

Times one double sweep (odd + even, with factor accumulation) and one
Jacobi SVD on random upper triangular matrices, for each backend.
"""

import argparse
import timeit

import numpy as np

from urvrefine import _kernels_py

try:
    from urvrefine import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _case(n, seed=0):
    rng = np.random.default_rng(seed)
    R = np.triu(rng.uniform(-1, 1, (n, n)))
    R[np.diag_indices(n)] = rng.uniform(0.1, 1.0, n)
    return R


def time_double_sweep(mod, R0, repeat, number):
    def run():
        R = R0.copy()
        G1 = np.eye(R.shape[0])
        G2 = np.eye(R.shape[0])
        mod.odd_sweep(R, G1)
        mod.even_sweep(R, G2)
    return min(timeit.repeat(run, repeat=repeat, number=number)) / number


def time_jacobi(mod, R0, repeat, number):
    def run():
        W = R0.copy()
        V = np.eye(R0.shape[1])
        mod.jacobi_sweeps(W, V, 1e-15, 60)
    return min(timeit.repeat(run, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension not built; only the Python backend is timed")
    print(f"{'kernel':<12}{'n':>5}{'python [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for n in args.sizes:
        R0 = _case(n)
        for name, fn in (("double sweep", time_double_sweep), ("jacobi", time_jacobi)):
            number = max(1, 2000 // (n * n)) if name == "jacobi" else max(1, 20000 // n)
            tp = fn(_kernels_py, R0, args.repeat, number)
            if _kernels_c is None:
                print(f"{name:<12}{n:>5}{tp * 1e6:>14.1f}{'-':>14}{'-':>10}")
                continue
            tc = fn(_kernels_c, R0, args.repeat, number)
            print(f"{name:<12}{n:>5}{tp * 1e6:>14.1f}{tc * 1e6:>14.1f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
