"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--count 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from padic_hua import _pykernels

try:
    from padic_hua import _ckernels
except ImportError:
    _ckernels = None


def _batch(gen, count, n, p, P, m=None):
    q = p**P
    A = gen.integers(0, q, size=(count, n, m or n), dtype=np.int64)
    A[::4] = A[::4] * p % q
    return A


def _cases(gen, count):
    for n, p, P in [(2, 2, 30), (3, 3, 20), (4, 2, 40)]:
        prec = np.full(count, P, dtype=np.int64)
        A = _batch(gen, count, n, p, P)
        B = _batch(gen, count, n, p, P)
        w = gen.integers(0, 3, size=count).astype(np.int64)
        while True:
            g = gen.integers(0, p**P, size=(2 * n, 2 * n), dtype=np.int64)
            if _pykernels.rank_mod_p_batch(g[None], p)[0] == 2 * n:
                break
        tag = f"n={n} p={p} P={P}"
        yield f"smith   {tag}", lambda mod: mod.smith_batch(A, prec, p)
        yield f"chart   {tag}", lambda mod: mod.chart_batch(A, B, prec, p)
        yield f"moebius {tag}", lambda mod: mod.moebius_batch(A, w, prec, g, p)
        yield f"rank    {tag}", lambda mod: mod.rank_mod_p_batch(A, p)


def _best(fn, mod, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(mod)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the Python timings are shown")
    gen = np.random.default_rng(args.seed)
    print(f"{'kernel':28s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in _cases(gen, args.count):
        py = _best(fn, _pykernels, args.repeat)
        if _ckernels is None:
            print(f"{name:28s} {py * 1e3:10.1f}")
            continue
        cy = _best(fn, _ckernels, args.repeat)
        print(f"{name:28s} {py * 1e3:10.1f} {cy * 1e3:10.2f} {py / cy:8.0f}x")


if __name__ == "__main__":
    main()
