"""Compare the compiled and pure-Python kernels on the hot paths.

Run with ``python3 benchmarks/bench_kernels.py [--pairs N] [--repeat K]``.
"""
import argparse
import time

import numpy as np

from superhost import kernels
from superhost.config import DEFAULT_CONFIG
from superhost.cube import cube_new


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = DEFAULT_CONFIG
    rng = np.random.default_rng(args.seed)
    iip = rng.integers(0, 1 << 32, args.pairs, dtype=np.uint64).astype(np.uint32)
    oip = rng.integers(0, 1 << 32, args.pairs, dtype=np.uint64).astype(np.uint32)
    g = cfg.g
    offsets = [cfg.column_bit_offset(5, a, 17) for a in range(cfg.num_arrays)]

    results = {}
    cubes = {}
    for name in kernels.available_backends():
        k = kernels.get_backend(name)
        cube = cube_new(cfg)
        upd = best_of(lambda: k.record_pairs(cube.buf, iip, oip, cfg), args.repeat)
        zc = best_of(lambda: k.column_zero_counts(cube.buf, 0, cfg.col_counts[0], g), args.repeat)
        scratch = np.empty(g, dtype=np.uint8)
        k.and_zero_count(cube.buf, offsets, g, scratch)
        t0 = time.perf_counter()
        for _ in range(10_000):
            k.and_zero_count(cube.buf, offsets, g, scratch)
        andz = (time.perf_counter() - t0) / 10_000
        results[name] = (upd, zc, andz)
        cubes[name] = cube

    print(f"config: r={cfg.r} g={cfg.g} cbn={cfg.cbn} ({cfg.nbytes >> 20} MiB), pairs={args.pairs}")
    print(f"{'backend':<10} {'update Mpairs/s':>16} {'zero counts (4096 cols) ms':>28} {'tuple AND us':>14}")
    for name, (upd, zc, andz) in results.items():
        print(f"{name:<10} {args.pairs / upd / 1e6:>16.2f} {zc * 1e3:>28.2f} {andz * 1e6:>14.2f}")
    if len(cubes) == 2:
        a, b = cubes.values()
        print(f"backends produce identical cubes: {a == b}")


if __name__ == "__main__":
    main()
