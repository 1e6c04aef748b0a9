#!/usr/bin/env python3
"""Time the compiled kernels against the pure-NumPy fallback.

Runs every kernel on a synthetic page at a few sizes and prints a
fixed-width table with the per-call time of each backend and the
speedup of the compiled extension. Pass ``--sizes`` to change the
page sizes and ``--repeats`` for more stable numbers.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from docenhance._kernels import available_backends


def _gaussian_taps(n: int, sigma: float) -> np.ndarray:
    offsets = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    taps = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def _operations(size: int):
    rng = np.random.default_rng(7)
    plane = rng.random((size, size))
    window = max(3, (round(size / 16) | 1))
    taps = _gaussian_taps(11, 1.5)
    return [
        ("max_filter w=%d" % window, lambda mod: mod.max_filter(plane, window)),
        ("min_filter w=%d" % window, lambda mod: mod.min_filter(plane, window)),
        ("box_blur w=%d" % window, lambda mod: mod.box_blur(plane, window)),
        ("laplacian_abs_sum", lambda mod: mod.laplacian_abs_sum(plane * 255.0)),
        ("resample_bilinear 2x", lambda mod: mod.resample_bilinear(plane, size * 2, size * 2)),
        ("gaussian_valid 11x11", lambda mod: mod.gaussian_valid(plane, taps)),
        ("downsample2x", lambda mod: mod.downsample2x(plane)),
    ]


def _best_of(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def _fmt_time(seconds: float) -> str:
    if seconds < 1e-3:
        return "%7.1f us" % (seconds * 1e6)
    return "%7.2f ms" % (seconds * 1e3)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="256,1024", help="comma-separated page sizes")
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeat count")
    args = parser.parse_args()

    backends = available_backends()
    pure = backends["pure"]
    native = backends.get("native")
    if native is None:
        print("compiled extension not importable; timing the fallback only")

    header = "%-24s %12s %12s %9s" % ("kernel", "pure", "native", "speedup")
    for size in (int(s) for s in args.sizes.split(",")):
        print("\n== %dx%d page ==" % (size, size))
        print(header)
        print("-" * len(header))
        for name, op in _operations(size):
            pure_t = _best_of(lambda: op(pure), args.repeats)
            if native is None:
                print("%-24s %12s %12s %9s" % (name, _fmt_time(pure_t), "-", "-"))
                continue
            native_t = _best_of(lambda: op(native), args.repeats)
            print(
                "%-24s %12s %12s %8.1fx"
                % (name, _fmt_time(pure_t), _fmt_time(native_t), pure_t / native_t)
            )


if __name__ == "__main__":
    main()
