#!/usr/bin/env python3
"""Timing comparison of the compiled stencil kernels vs the numpy fallback.

Runs each hot kernel on square grids of increasing size and reports the
per-call time of the numpy backend, the compiled backend at one thread,
and the compiled backend at the requested thread count, plus speedups.
Both backends are verified bit-identical on every size before timing.

Usage:
    python benchmarks/bench_kernels.py [--sizes 128,256,512,1024]
                                       [--repeats 20] [--threads 8]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from relfluid import _kernels
from relfluid._kernels import numpy_backend


def _time_call(fn, *args, repeats: int) -> float:
    fn(*args)  # warm up caches and any lazy allocation
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def _bench_size(n: int, repeats: int, threads: int) -> list[str]:
    rng = np.random.default_rng(12345)
    f = rng.standard_normal((n, n))
    g = rng.standard_normal((n, n))
    px = rng.standard_normal((n, n))
    py = rng.standard_normal((n, n))
    dx = dy = 2.0 * np.pi / n
    inv_c2 = 0.25

    cases = [
        ("arakawa_jacobian", lambda be: be.arakawa_jacobian(f, g, dx, dy)),
        ("lorentz_gamma_2d", lambda be: be.lorentz_gamma_2d(px, py, inv_c2)),
    ]

    rows = []
    for name, call in cases:
        reference = call(numpy_backend)
        if _kernels.BACKEND == "compiled":
            _kernels.set_threads(1)
            if not np.array_equal(call(_kernels), reference):
                raise AssertionError(f"{name}: backends disagree at n={n}")

        t_numpy = _time_call(call, numpy_backend, repeats=repeats)
        if _kernels.BACKEND == "compiled":
            _kernels.set_threads(1)
            t_one = _time_call(call, _kernels, repeats=repeats)
            _kernels.set_threads(threads)
            t_many = _time_call(call, _kernels, repeats=repeats)
            _kernels.set_threads(1)
            rows.append(
                f"{name:18s} {n:>5d}^2  numpy {t_numpy * 1e3:8.3f} ms"
                f"  compiled(1) {t_one * 1e3:8.3f} ms ({t_numpy / t_one:5.1f}x)"
                f"  compiled({threads}) {t_many * 1e3:8.3f} ms"
                f" ({t_numpy / t_many:5.1f}x)"
            )
        else:
            rows.append(
                f"{name:18s} {n:>5d}^2  numpy {t_numpy * 1e3:8.3f} ms"
                "  (compiled backend not available)"
            )
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="128,256,512,1024")
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--threads", type=int, default=8)
    args = parser.parse_args()

    print(f"active backend: {_kernels.BACKEND}")
    for n in (int(s) for s in args.sizes.split(",")):
        for row in _bench_size(n, args.repeats, args.threads):
            print(row)


if __name__ == "__main__":
    main()
