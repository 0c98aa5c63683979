"""Timing comparison of the compiled kernels against the numpy fallback.

Runs each hot kernel through both implementations on identical inputs,
reports wall times and speedups, and checks the two paths agree numerically
(they are not bit-identical: operation order differs, so expect relative
differences at the 1e-12 scale).

Usage: python benchmarks/bench_kernels.py [--size N] [--repeat R]
"""

import argparse
import time

import numpy as np

from vecherald import backend, kernels


def timeit(fn, args, repeat):
    fn(*args)  # warmup (also triggers compilation on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def rel_diff(a, b):
    out = 0.0
    for x, y in zip(np.atleast_1d(a), np.atleast_1d(b)):
        scale = max(np.abs(x).max(), 1e-300)
        out = max(out, float(np.abs(np.asarray(x) - np.asarray(y)).max() / scale))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512, help="grid edge (default 512)")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if not backend.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    n = args.size
    half = 4.0
    ax = np.linspace(-half, half, n)
    xg, yg = np.meshgrid(ax, ax)
    rng = np.random.default_rng(11)
    eh = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    ev = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    two_beta = 2.0 * (0.5 * np.arctan2(yg, xg) + 0.1)
    xs = rng.uniform(-3, 3, 4096)
    ys = rng.uniform(-3, 3, 4096)
    vals = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    pitch = 2 * half / (n - 1)

    cases = {
        "lg_samples": (xg, yg, 2, 1.0),
        "retarder_apply": (eh, ev, two_beta, 0.5 * np.pi),
        "stokes_from_hv": (eh, ev),
        "bilinear_sample": (vals, xs, ys, -half, -half, pitch, pitch),
    }

    numba_impls = kernels.numba_impls()
    print(f"grid {n}x{n}, best of {args.repeat}")
    print(f"{'kernel':<16} {'numpy':>10} {'numba':>10} {'speedup':>8}  agreement")
    for name, a in cases.items():
        f_np = kernels.NUMPY_IMPLS[name]
        f_nb = numba_impls[name]
        t_np = timeit(f_np, a, args.repeat)
        t_nb = timeit(f_nb, a, args.repeat)
        d = rel_diff(f_np(*a), f_nb(*a))
        print(f"{name:<16} {t_np*1e3:>8.2f}ms {t_nb*1e3:>8.2f}ms "
              f"{t_np/t_nb:>7.1f}x  max rel diff {d:.2e}")


if __name__ == "__main__":
    main()
