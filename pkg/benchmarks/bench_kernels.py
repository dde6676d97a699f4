"""Compare the compiled and pure-Python stiffness kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--order 1|2]

Each run builds the full discretization (recovery plus stiffness blocks)
and then re-evaluates only the stiffness blocks, which is where the
kernels are used.  The assembled matrices of both backends are compared.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fpm2d.assembly import Discretization
from fpm2d.benchmarks import build_benchmark
from fpm2d.kernels import IMPLEMENTATIONS

CASES = [("cantilever", "81x11"), ("cantilever", "161x21"), ("mode1_square", "40x40")]


def _best(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--order", type=int, default=1, choices=(1, 2))
    args = ap.parse_args(argv)
    backends = sorted(IMPLEMENTATIONS)
    if "compiled" not in backends:
        print("compiled kernels are not built; only the Python fallback is timed")
    print(f"{'case':<22}{'backend':<10}{'build s':>10}{'blocks s':>10}{'speedup':>9}")
    for name, res in CASES:
        model = build_benchmark(name, res)
        mats, times = {}, {}
        for b in backends:
            disc = Discretization(model, order=args.order, kernel=b, warn=False)
            t_build = _best(lambda: Discretization(model, order=args.order, kernel=b, warn=False), args.repeat)

            def blocks(d=disc):
                n = d.partition
                d._compute_points(range(n.n_points))
                d._compute_segments(range(n.n_segments))

            times[b] = (t_build, _best(blocks, args.repeat))
            mats[b] = disc.K
        ref = times["python"][1]
        for b in backends:
            tb, tk = times[b]
            print(f"{name + ' ' + res:<22}{b:<10}{tb:>10.3f}{tk:>10.3f}{ref / tk:>8.1f}x")
        if len(mats) == 2:
            d = abs(mats["python"] - mats["compiled"]).max() / abs(mats["python"]).max()
            print(f"{'':<22}max relative K difference {d:.2e}")


if __name__ == "__main__":
    main()
