"""Time every hot kernel through its numba and pure-numpy implementations.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both variants are imported from the same module regardless of
MAMCAST_DISABLE_NUMBA, so one run compares them side by side. The first
numba call (compilation) happens before timing.
"""
import argparse
import timeit

import numpy as np

from mamcast import _accel, kernels
from mamcast.channel import PositionGrid, wavelength_from_ghz
from mamcast.convex_core import _surrogate_rows, weakest_user_mrt
from mamcast.los_bab import build_coupling, shift_constants


def cases(rng):
    lam = wavelength_from_ghz(5.0)
    grid = PositionGrid.square(25, lam)
    gains = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
    rho = rng.uniform(-1, 1, size=(5, 4, 2))
    H = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
    A, b = _surrogate_rows(H, weakest_user_mrt(H, 1.0, 1.0))
    table = rng.normal(size=(25, 5)) + 1j * rng.normal(size=(25, 5))
    placement = np.array([2, 7, 13, 21], dtype=np.int64)
    w = rng.normal(size=4) + 1j * rng.normal(size=4)
    h1, h2 = rng.normal(size=(2, 25)) + 1j * rng.normal(size=(2, 25))
    big = PositionGrid.square(25, lam)
    c = build_coupling(big, [0.31, -0.52], [-0.7, 0.2])
    X, Y = shift_constants(c.Q)
    Z = float((c.Q - np.diag(np.full(25, np.inf))).max())
    return {
        "gain_table (M=25, K=5, L=4)": ("gain_table", (grid.positions, gains, rho, lam)),
        "maxmin_ball (K=5, N=4)": ("maxmin_ball", (A, b, 1.0)),
        "position_scan (M=25, K=5, N=4)": ("position_scan", (table, placement, w, 1)),
        "greedy_two_user (M=25, N=4)": ("greedy_two_user", (h1, h2, 4)),
        "bab (M=25, N=4, completion)": ("bab", (c.Q, 4, X, Y, Z, True, -np.inf)),
        "bab (M=25, N=4, shift only)": ("bab", (c.Q, 4, X, Y, Z, False, -np.inf)),
        "exhaustive (M=25, N=4)": ("exhaustive", (c.g, 4)),
    }


def best_time(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':34s} {'numba':>12s} {'numpy':>12s} {'speed-up':>9s}")
    for label, (name, fargs) in cases(np.random.default_rng(args.seed)).items():
        nb, npy = getattr(kernels, name + "_nb"), getattr(kernels, name + "_np")
        nb(*fargs)  # compile
        t_nb = best_time(nb, fargs, args.repeat)
        t_np = best_time(npy, fargs, args.repeat)
        print(f"{label:34s} {t_nb * 1e6:10.1f}us {t_np * 1e6:10.1f}us {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
