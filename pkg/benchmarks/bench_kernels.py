"""Time the compiled kernels against their pure Python/NumPy sources.

    python benchmarks/bench_kernels.py [--steps 20000] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from fermicav import _accel, kernels
from fermicav._accel import python_impl
from fermicav.fermisea import fermi_sea_summary

B_TILDE = fermi_sea_summary(20, 50).b_tilde


def rk4_args(steps):
    return (complex(5.0), complex(5.0), 25.0, 0.0, 1e-3, steps, 100, 10.0, 1, 10.0, 10.0, 1.0,
            20, B_TILDE, True, 2.05, 101, 0.0, False)


def residual_scan(xi, grid):
    return [xi(n, 10.0, 1, 20, B_TILDE) for n in grid]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _accel.USE_NUMBA:
        raise SystemExit("numba disabled (FERMICAV_NUMBA); nothing to compare")

    grid = np.geomspace(2.5, 1e3, 4000)
    cases = {
        f"rk4_kernel ({args.steps} steps, exact shift)": (
            lambda: kernels.rk4_kernel(*rk4_args(args.steps)),
            lambda: python_impl(kernels.rk4_kernel)(*rk4_args(args.steps))),
        "xi_exact, 4000 scalar calls": (
            lambda: residual_scan(kernels.xi_exact, grid),
            lambda: residual_scan(python_impl(kernels.xi_exact), grid)),
    }
    for fast, _ in cases.values():
        fast()  # compile / load from cache outside the timing
    print(f"{'case':45s} {'numba [s]':>11s} {'python [s]':>11s} {'speed-up':>9s}")
    for name, (fast, slow) in cases.items():
        tf = min(timeit.repeat(fast, number=1, repeat=args.repeat))
        ts = min(timeit.repeat(slow, number=1, repeat=args.repeat))
        print(f"{name:45s} {tf:11.4f} {ts:11.4f} {ts / tf:9.1f}")


if __name__ == "__main__":
    main()
