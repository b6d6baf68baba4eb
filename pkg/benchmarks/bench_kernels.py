"""Compare the compiled kernels with the pure-Python fallback.

Runs each hot kernel on both backends with identical inputs, checks the
outputs are bit-identical, and prints wall time and speed-up::

    python3 benchmarks/bench_kernels.py [--n 14] [--k 4] [--steps 200000] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from nklab import _pykernels
from nklab.landscape import Landscape, LandscapeSpec

try:
    from nklab import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_time(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    return a == b


def cases(n: int, k: int, steps: int):
    land = Landscape(LandscapeSpec(n=n, k=k, seed=1))
    args = land.kernel_args()
    e = _pykernels.energies(*args)
    patterns = np.arange(1, min(1 << n, 64), dtype=np.int64)
    return {
        "energies": lambda m: m.energies(*args),
        "window_counts": lambda m: m.window_counts(n, k),
        "metropolis": lambda m: m.metropolis(*args, 1.0, 0, float(e[0]), steps, 7, 0, 0, 1),
        "coupled_max": lambda m: m.coupled_max(e, patterns),
    }


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=14)
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the pure-Python kernels are available")
        return 1
    print(f"N={args.n} K={args.k} metropolis steps={args.steps} (best of {args.repeat})")
    print(f"{'kernel':<14} {'python s':>10} {'cython s':>10} {'speed-up':>9}  identical")
    ok = True
    for name, fn in cases(args.n, args.k, args.steps).items():
        tp, outp = best_time(lambda: fn(_pykernels), args.repeat)
        tc, outc = best_time(lambda: fn(_kernels), args.repeat)
        eq = same(outp, outc)
        ok &= eq
        print(f"{name:<14} {tp:>10.4f} {tc:>10.4f} {tp / tc:>8.1f}x  {eq}")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
