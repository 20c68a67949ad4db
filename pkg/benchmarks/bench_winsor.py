"""Compare the compiled winsorize kernels against the numpy fallback.

Usage: python benchmarks/bench_winsor.py [--threads N]

Shapes mirror the experiment presets: the (784 -> 64) layer dominates the
winsorized-update cost at desk scale, (784 -> 256) at the noise-study
scale, with minibatch 100.
"""

import argparse
import time

import numpy as np

from gradlab import _kernels_py, kernels

CASES = [
    ("layer 784->64", 64, 784, 100),
    ("layer 64->64", 64, 64, 100),
    ("layer 784->256", 256, 784, 100),
]
KS = (0, 2, 4, 8)


def bench(fn, *args, repeats=5, **kw):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args, **kw)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--threads", type=int, default=kernels.default_threads())
    args = parser.parse_args()

    if not kernels.HAVE_COMPILED:
        print("compiled kernels unavailable; nothing to compare")
        return

    from gradlab import _kernels

    rng = np.random.default_rng(0)
    print(f"threads={args.threads}")
    print(f"{'case':>16} {'k':>3} {'compiled ms':>12} {'fallback ms':>12} {'speedup':>8}  agree")
    for name, fo, fi, m in CASES:
        deltaT = np.ascontiguousarray(rng.standard_normal((fo, m)))
        actsT = np.ascontiguousarray(rng.standard_normal((fi, m)))
        for k in KS:
            t_c = bench(_kernels.winsorized_outer_sum, deltaT, actsT, k, threads=args.threads)
            t_p = bench(_kernels_py.winsorized_outer_sum, deltaT, actsT, k, repeats=2)
            out_c = _kernels.winsorized_outer_sum(deltaT, actsT, k, threads=args.threads)
            out_p = _kernels_py.winsorized_outer_sum(deltaT, actsT, k)
            rel = np.abs(out_c - out_p) / np.maximum(np.abs(out_p), 1e-12)
            print(
                f"{name:>16} {k:>3} {t_c * 1e3:>12.2f} {t_p * 1e3:>12.2f} "
                f"{t_p / t_c:>7.1f}x  max_rel={rel.max():.1e}"
            )


if __name__ == "__main__":
    main()
