#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure NumPy/Python fallbacks.

Run from a built checkout:

    python3 benchmarks/bench_kernels.py

Times the alignment DP on random phone-sequence pairs and the convolution
forward/backward at the shapes the default front end produces. Prints one
table per kernel; the import-time selection in plfkit.kernels follows what
these numbers show (compiled DP, BLAS-backed conv).
"""

import time

import numpy as np

from plfkit.kernels import available_backends, backend_name, reference


def _time(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_edit_counts(backends):
    rng = np.random.default_rng(0)
    pairs = [
        (
            rng.integers(0, 10, rng.integers(50, 300)).astype(np.int32),
            rng.integers(0, 10, rng.integers(50, 300)).astype(np.int32),
        )
        for _ in range(100)
    ]
    print("\nalignment DP (100 random pairs, lengths 50-300):")
    base = None
    for name, mod in backends.items():
        t = _time(lambda m=mod: [m.edit_counts(a, b) for a, b in pairs])
        base = base or t
        print(f"  {name:8s} {1000 * t:8.1f} ms   ({base / t:5.1f}x vs first row)")


def bench_conv(backends):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(32, 84, 22))
    w = rng.normal(size=(64, 32, 3, 3))
    b = np.zeros(64)
    dout = rng.normal(size=reference.conv2d_forward(x, w, b, 2, 1).shape)
    print("\nconv2d at front-end layer-2 shape (32,84,22)->(64,40,20):")
    base_f = base_b = None
    for name, mod in backends.items():
        tf = _time(lambda m=mod: m.conv2d_forward(x, w, b, 2, 1))
        tb = _time(lambda m=mod: m.conv2d_backward(x, w, 2, 1, dout))
        base_f = base_f or tf
        base_b = base_b or tb
        print(
            f"  {name:8s} fwd {1000 * tf:7.2f} ms ({base_f / tf:5.1f}x)   "
            f"bwd {1000 * tb:7.2f} ms ({base_b / tb:5.1f}x)"
        )


def main():
    backends = available_backends()
    print(f"active backend: {backend_name()}; available: {', '.join(backends)}")
    if len(backends) == 1:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace` to compare")
    bench_edit_counts(backends)
    bench_conv(backends)


if __name__ == "__main__":
    main()
