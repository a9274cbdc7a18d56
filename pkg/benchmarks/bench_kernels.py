"""Compare the compiled and numpy polynomial kernels.

Run with ``python3 benchmarks/bench_kernels.py``. The polynomials are coproduct
images of the sl2 Casimir and of a mixed h6 quadratic, evaluated on up to four
copies as in the constant-of-motion checks.
"""

import argparse
import timeit

import numpy as np

from lhk import _kernels
from lhk._kernels import _fallback
from lhk.sympoly import SymPoly, coproduct


def cases():
    sl2 = SymPoly.parse("v1*v3 - v2^2", 3)
    h6 = SymPoly.parse("2*v4*v6 - v3^2 + v1*v5 - v2^2*v6", 6)
    out = []
    for name, p in (("sl2", sl2), ("h6", h6)):
        for m in (1, 2, 3, 4):
            out.append((f"{name} m={m}", coproduct(p, m)))
    return out


def bench(fn, exps, coeffs, vals, repeat):
    times = timeit.repeat(lambda: fn(exps, coeffs, vals), number=1, repeat=repeat)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=7)
    args = parser.parse_args(argv)

    if _kernels.BACKEND != "cython":
        print("compiled kernel not available; only the numpy fallback can be timed")
    rng = np.random.default_rng(0)
    header = f"{'polynomial':<12} {'terms':>6} {'kernel':<14} {'numpy [ms]':>11} {'compiled [ms]':>14} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, p in cases():
        exps, coeffs = p.arrays()
        vals = rng.uniform(-1.5, 1.5, size=(args.points, p.nvars))
        for kname in ("poly_eval", "poly_eval_grad"):
            t_py = bench(getattr(_fallback, kname), exps, coeffs, vals, args.repeat)
            if _kernels.BACKEND == "cython":
                t_c = bench(getattr(_kernels, kname), exps, coeffs, vals, args.repeat)
                extra = f"{1e3 * t_c:>14.3f} {t_py / t_c:>7.1f}x"
            else:
                extra = f"{'n/a':>14} {'n/a':>8}"
            print(f"{label:<12} {len(coeffs):>6} {kname:<14} {1e3 * t_py:>11.3f} {extra}")


if __name__ == "__main__":
    main()
