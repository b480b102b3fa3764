"""Compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--nx 63 127 255] [--nt 400] [--repeat 5]

Prints the best-of-``repeat`` wall time of each kernel for both backends
and the speed-up. Results also go to ``--csv`` if given.
"""
import argparse
import timeit

import numpy as np

from burgers_alpha import _kernels_py as py
from burgers_alpha.io import write_table

try:
    from burgers_alpha import _kernels as cy
except ImportError:  # extension not built
    cy = None


def cases(nx, nt):
    rng = np.random.default_rng(0)
    dx, dt = 1.0 / (nx + 1), 1.0 / nt
    y0 = np.sin(np.pi * dx * np.arange(1, nx + 1))
    A = 0.5 * rng.standard_normal((nt, nx))
    S = rng.standard_normal((nt, nx))
    off, diag = np.full(nx - 1, -1.0), np.full(nx, 4.0)
    rhs = rng.standard_normal((nx, nt))
    return {
        "thomas": lambda k: k.thomas(off, diag, off, rhs),
        "march_linear": lambda k: k.march_linear(y0, A, S, dt, dx),
        "march_adjoint": lambda k: k.march_adjoint(y0, A, dt, dx),
        "march_burgers_alpha": lambda k: k.march_burgers_alpha(y0, S, dt, dx, 0.1, nx),
    }


def best(fn, mod, repeat):
    return min(timeit.repeat(lambda: fn(mod), number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--nx", type=int, nargs="+", default=[63, 127, 255])
    p.add_argument("--nt", type=int, default=400)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--csv", default=None)
    args = p.parse_args(argv)
    if cy is None:
        print("compiled extension not built; only the fallback is timed")
    rows = []
    print(f"{'kernel':<22}{'nx':>6}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}")
    for nx in args.nx:
        for name, fn in cases(nx, args.nt).items():
            tp = best(fn, py, args.repeat)
            tc = best(fn, cy, args.repeat) if cy is not None else float("nan")
            rows.append({"kernel": name, "nx": nx, "nt": args.nt, "python_s": tp, "cython_s": tc,
                         "speedup": tp / tc})
            print(f"{name:<22}{nx:>6}{1e3 * tp:>14.3f}{1e3 * tc:>14.3f}{tp / tc:>10.1f}")
    if args.csv:
        write_table(args.csv, ("kernel", "nx", "nt", "python_s", "cython_s", "speedup"), rows)


if __name__ == "__main__":
    main()
