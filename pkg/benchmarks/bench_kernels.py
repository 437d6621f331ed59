"""Time the compiled and numpy kernels on random quadratic pools.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--json out.json]

Every kernel is first checked for agreement between backends (rtol 1e-12),
then timed with timeit; the table reports microseconds per call.
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from mamlflow.datagen import random_quadratic_pool
from mamlflow.kernels import available_backends

SHAPES = [(2, 1), (5, 5), (10, 20), (50, 20), (20, 100)]
KERNELS = ("expected_grad", "maml_grad", "fo_maml_grad", "maml_loss", "monitor")


def kernel_args(name, H, b, c, p, alpha, w):
    if name == "expected_grad":
        return (H, b, p, w)
    if name in ("maml_grad", "fo_maml_grad"):
        return (H, b, p, alpha, w)
    return (H, b, c, p, alpha, w)


def _flat(out):
    if isinstance(out, tuple):
        return np.concatenate([np.atleast_1d(np.asarray(o, dtype=float)) for o in out])
    return np.atleast_1d(np.asarray(out, dtype=float))


def bench(repeat: int):
    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy kernels only", file=sys.stderr)
    rows = []
    for M, d in SHAPES:
        pool = random_quadratic_pool(M, d, seed=0)
        H, b, c = pool.quadratic_stack
        p = np.asarray(pool.weights, dtype=np.float64)
        w = np.random.default_rng(1).standard_normal(d)
        for name in KERNELS:
            args = kernel_args(name, H, b, c, p, 0.05, w)
            ref = _flat(getattr(backends["python"], name)(*args))
            row = {"M": M, "d": d, "kernel": name}
            for be, mod in backends.items():
                fn = getattr(mod, name)
                np.testing.assert_allclose(_flat(fn(*args)), ref, rtol=1e-12, atol=1e-12)
                t = min(timeit.repeat(lambda: fn(*args), number=repeat, repeat=3)) / repeat
                row[be] = t * 1e6
            if "cython" in row:
                row["speedup"] = row["python"] / row["cython"]
            rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--json", metavar="PATH")
    args = ap.parse_args(argv)
    rows = bench(args.repeat)
    print(f"{'M':>4} {'d':>4} {'kernel':<14} {'python us':>10} {'cython us':>10} {'speedup':>8}")
    for r in rows:
        cy = f"{r['cython']:10.2f}" if "cython" in r else f"{'-':>10}"
        sp = f"{r['speedup']:8.1f}" if "speedup" in r else f"{'-':>8}"
        print(f"{r['M']:>4} {r['d']:>4} {r['kernel']:<14} {r['python']:10.2f} {cy} {sp}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
