"""Timing comparison of the compiled and pure-numpy kernel backends.

Runs each hot kernel on realistically shaped inputs (6D wrench hull facets,
simplex determinant stacks, tet element batches) and reports the best wall
time per backend plus the speedup.  The compiled backend is warmed up first
so JIT compilation is not counted.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    SOFTGRASP_PURE_NUMPY=1 python3 benchmarks/bench_kernels.py   # numpy only
"""

import argparse
import time

import numpy as np

from softgrasp import kernels


def best_time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def make_cases(rng, scale):
    nf, nd = 600 * scale, 64
    normals = rng.normal(size=(nf, 6))
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    offsets = rng.uniform(0.2, 2.0, size=nf)
    dirs = rng.normal(size=(nd, 6))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]

    mats = rng.normal(size=(3000 * scale, 6, 6))
    coords = rng.normal(size=(2000 * scale, 4, 3))

    return [
        ("ray_exit_batch", kernels.ray_exit_batch_numpy, kernels.ray_exit_batch_numba,
         (normals, offsets, dirs)),
        ("det_abs_sum", kernels.det_abs_sum_numpy, kernels.det_abs_sum_numba, (mats,)),
        ("tet_stiffness_batch", kernels.tet_stiffness_batch_numpy,
         kernels.tet_stiffness_batch_numba, (coords, 1.15e5, 7.7e4)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=7, help="timing repetitions")
    parser.add_argument("--scale", type=int, default=1, help="input size multiplier")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    cases = make_cases(rng, args.scale)

    print(f"backend selected at import: {kernels.backend_name()}")
    header = f"{'kernel':<22}{'numpy':>12}{'numba':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, fn_np, fn_nb, call_args in cases:
        t_np = best_time(fn_np, call_args, args.repeat)
        if fn_nb is None:
            print(f"{name:<22}{t_np * 1e3:>10.2f}ms{'-':>12}{'-':>10}")
            continue
        fn_nb(*call_args)  # warm the JIT cache before timing
        t_nb = best_time(fn_nb, call_args, args.repeat)
        print(
            f"{name:<22}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms"
            f"{t_np / t_nb:>9.1f}x"
        )


if __name__ == "__main__":
    main()
