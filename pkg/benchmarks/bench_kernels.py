"""Compare the compiled and numpy kernel backends on the hot loops.

    python benchmarks/bench_kernels.py [--repeat 3]

Each row reports the best wall time of ``--repeat`` runs per backend and
checks that both backends return identical arrays.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from brw import kernels
from brw.params import ParameterSet
from brw.tree import LabelOracle, replicate_keys


def _best(fn, repeat: int):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(p: ParameterSet):
    key = LabelOracle(1, p).key
    keys = replicate_keys(1, 2000)
    idx = np.arange(1 << 20, dtype=np.uint64)
    return {
        "leaf_values depth 20": lambda m: m.leaf_values(key, 2, 20, p.thresholds, p.digit_array,
                                                        p.powers(20))[0],
        "leaf_values_batch 2000 x depth 8": lambda m: m.leaf_values_batch(
            keys, 2, 8, p.thresholds, p.digit_array, p.powers(8)),
        "vertex_digits 2^20 vertices": lambda m: m.vertex_digits(
            key, 20, np.zeros_like(idx), idx, p.thresholds),
        "gw_level_sizes 1e5 x depth 80": lambda m: m.gw_level_sizes(
            replicate_keys(2, 100000), 80, 2, p.thresholds, 1),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    p = ParameterSet(lam=0.7)
    try:
        compiled = kernels.backend("cython")
    except ImportError:
        compiled = None
        print("compiled kernels not built; timing the numpy backend only")
    numpy_backend = kernels.backend("numpy")
    print(f"{'kernel':36s} {'cython s':>10s} {'numpy s':>10s} {'speedup':>8s} identical")
    for name, fn in cases(p).items():
        t_np, out_np = _best(lambda: fn(numpy_backend), args.repeat)
        if compiled is None:
            print(f"{name:36s} {'-':>10s} {t_np:10.4f}")
            continue
        t_c, out_c = _best(lambda: fn(compiled), args.repeat)
        same = np.array_equal(out_np, out_c)
        print(f"{name:36s} {t_c:10.4f} {t_np:10.4f} {t_np / t_c:8.1f} {same}")


if __name__ == "__main__":
    main()
