"""Hot-kernel backend selection.

Two kernel families live here with interchangeable implementations:

* alignment DP (``edit_counts``): scalar and branchy; the compiled version
  is ~50x faster than the pure-Python DP and is used whenever the extension
  built. ``PLFKIT_PURE=1`` forces the fallback.
* valid 2D convolution forward/backward: the NumPy implementation lowers to
  BLAS matmuls via im2col and beats the straight compiled loops by ~10x at
  production shapes (see benchmarks/bench_kernels.py), so it is the default
  everywhere; the compiled loops remain for verification and benchmarking.
"""

from __future__ import annotations

import importlib
import os

from . import reference

_native = None
if os.environ.get("PLFKIT_PURE", "0").lower() not in ("1", "true", "yes"):
    try:
        _native = importlib.import_module(__name__ + "._native")
    except ImportError:
        _native = None

edit_counts = _native.edit_counts if _native is not None else reference.edit_counts
conv2d_forward = reference.conv2d_forward
conv2d_backward = reference.conv2d_backward


def backend_name() -> str:
    """'native' when the compiled alignment kernel is active, else 'pure'."""
    return "native" if _native is not None else "pure"


def available_backends() -> dict:
    """Map of backend name -> module, for parity tests and benchmarks."""
    out = {"pure": reference}
    if _native is not None:
        out["native"] = _native
    return out
