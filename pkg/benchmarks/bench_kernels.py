"""Time the per-pair kernels, numba loops against the numpy fallback.

    python benchmarks/bench_kernels.py [--m 64 128] [--repeat 20]

Both flavours are imported side by side, so FRACWELL_NUMBA does not matter
here. The jit versions are warmed up once before timing.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fracwell import _kernels
from fracwell._accel import NUMBA_ENABLED
from fracwell.grid import Domain1D, MagneticField, build_kernel


def _cases(table, ue, coef):
    m = table.domain.M
    args_q = (ue, table.I, table.J, table.phase, table.rs)
    args_s = (coef, table.I, table.J, table.conj_phase, table.rs, m)
    args_w = (table.w, np.abs(coef))
    return [
        ("pair_quotients", _kernels.pair_quotients_np, _kernels.pair_quotients_jit, args_q),
        ("scatter_pairs", _kernels.scatter_pairs_np, _kernels.scatter_pairs_jit, args_s),
        ("weighted_sum", _kernels.weighted_sum_np, _kernels.weighted_sum_jit, args_w),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if not NUMBA_ENABLED:
        print("numba disabled or missing: jit column times the same numpy code")
    rng = np.random.default_rng(0)
    print(f"{'M':>5} {'pairs':>8} {'kernel':<16} {'numpy [us]':>11} {'numba [us]':>11} {'speedup':>8}")
    for m in args.m:
        table = build_kernel(Domain1D(-1, 1, m), 0.5, MagneticField("linear", 1.0))
        ue = np.concatenate([rng.normal(size=m) + 1j * rng.normal(size=m), [0.0]])
        coef = rng.normal(size=table.n_pairs) + 1j * rng.normal(size=table.n_pairs)
        for name, f_np, f_jit, fargs in _cases(table, ue, coef):
            f_jit(*fargs)  # compile
            t_np = min(timeit.repeat(lambda: f_np(*fargs), number=5, repeat=args.repeat)) / 5
            t_jit = min(timeit.repeat(lambda: f_jit(*fargs), number=5, repeat=args.repeat)) / 5
            print(f"{m:>5} {table.n_pairs:>8} {name:<16} {t_np * 1e6:>11.1f} {t_jit * 1e6:>11.1f} {t_np / t_jit:>8.2f}")


if __name__ == "__main__":
    main()
