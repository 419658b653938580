"""Compare the numba loop kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--sizes 100 10000 200000] [--repeat 5]

Each kernel is called once to compile (and to check both paths agree) before timing.
"""

import argparse
import timeit

import numpy as np

from hyperop import kernels
from hyperop._accel import HAS_NUMBA
from hyperop.algebra import get_algebra

KERNELS = {
    "mul_batch": lambda a, b, t: (a, b, t.idx, t.sgn),
    "left_mats": lambda a, b, t: (a, t.idx, t.sgn),
    "right_mats": lambda a, b, t: (a, t.idx, t.sgn),
    "kinner": lambda a, b, t: (a, b, t.idx, t.sgn),
}


def best_of(fn, args, repeat):
    number = 1
    # grow the loop count until one measurement takes ~50 ms
    while True:
        t = timeit.timeit(lambda: fn(*args), number=number)
        if t > 0.05 or number >= 1 << 16:
            break
        number *= 4
    times = timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)
    return min(times) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 10_000, 200_000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba not installed; only the numpy path is timed")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<11} {'alg':<3} {'rows':>8} {'numpy':>11} {'numba':>11} {'speedup':>8}")
    for kind in ("H", "O"):
        tag = get_algebra(kind)
        for n in args.sizes:
            a = rng.standard_normal((n, tag.dim))
            b = rng.standard_normal((n, tag.dim))
            for name, make in KERNELS.items():
                fa = make(a, b, tag)
                f_np = getattr(kernels, name + "_np")
                t_np = best_of(f_np, fa, args.repeat)
                if HAS_NUMBA:
                    f_nb = getattr(kernels, name + "_nb")
                    np.testing.assert_allclose(f_nb(*fa), f_np(*fa), rtol=1e-12, atol=1e-9)
                    t_nb = best_of(f_nb, fa, args.repeat)
                    print(f"{name:<11} {kind:<3} {n:>8} {t_np * 1e6:>9.1f}us {t_nb * 1e6:>9.1f}us "
                          f"{t_np / t_nb:>7.1f}x")
                else:
                    print(f"{name:<11} {kind:<3} {n:>8} {t_np * 1e6:>9.1f}us {'-':>11} {'-':>8}")


if __name__ == "__main__":
    main()
