"""Compiled vs numpy kernels for off-grid series evaluation and flow inversion.

    python3 benchmarks/bench_kernels.py [--sizes 64 128 256 512] [--repeat 5]

Prints one line per (kernel, N, backend) with the best wall time, and the
max difference between backends.
"""

import argparse
import timeit

import numpy as np

from mep_lab import kernels
from mep_lab.lagrangian import _node_brackets, series_coefficients
from mep_lab.spectral import Grid


def case(n):
    g = Grid(1, n)
    p = 0.3 * np.sin(g.x) + 0.05 * np.cos(3 * g.x)
    a0, c = series_coefficients(g, p)
    y = np.ascontiguousarray(g.x + p)
    lo, hi = _node_brackets(g.x, p)
    return a0, c, y, g.x, lo, hi


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    found = kernels.backends()
    if "compiled" not in found:
        print("compiled backend not built; timing the numpy fallback only")
    print(f"{'kernel':<14}{'N':>6}  " + "  ".join(f"{b:>12}" for b in found) + "   speedup   max|diff|")
    for n in args.sizes:
        a0, c, y, x, lo, hi = case(n)
        jobs = {
            "eval_series": lambda m: m.eval_series(a0, c, y),
            "invert_shift": lambda m: m.invert_shift(a0, c, x, lo, hi, 2.5e-13, 100)[0],
        }
        for name, job in jobs.items():
            times, outs = {}, {}
            for b, mod in found.items():
                outs[b] = job(mod)
                number = max(1, int(2e6 // (n * n)))
                times[b] = min(timeit.repeat(lambda: job(mod), number=number, repeat=args.repeat)) / number
            cols = "  ".join(f"{times[b] * 1e3:10.3f}ms" for b in found)
            if "compiled" in found:
                speed = times["python"] / times["compiled"]
                diff = float(np.max(np.abs(outs["python"] - outs["compiled"])))
                print(f"{name:<14}{n:>6}  {cols}   {speed:7.1f}x   {diff:.2e}")
            else:
                print(f"{name:<14}{n:>6}  {cols}")


if __name__ == "__main__":
    main()
