"""Backend selection for the hot stencil kernels.

The compiled extension is preferred when it imported cleanly; setting the
environment variable ``RELFLUID_PURE_PYTHON=1`` before import forces the
numpy fallback. Both backends produce bit-identical output (the benchmark
under ``benchmarks/`` measures the speed difference).

The thread count set here only affects row parallelism inside the compiled
kernels; results are independent of it by construction (static schedule,
no reductions).
"""

from __future__ import annotations

import os

import numpy as np

from . import numpy_backend

if os.environ.get("RELFLUID_PURE_PYTHON", "") == "1":
    _ext = None
else:
    try:
        from . import _stencil as _ext
    except ImportError:
        _ext = None

BACKEND = "compiled" if _ext is not None else "numpy"

_num_threads = 1


def set_threads(n: int) -> None:
    """Set the worker count used by compiled kernels (>= 1)."""
    global _num_threads
    _num_threads = max(1, int(n))


def threads() -> int:
    return _num_threads


def arakawa_jacobian(f: np.ndarray, g: np.ndarray, dx: float, dy: float) -> np.ndarray:
    if _ext is not None:
        return _ext.arakawa_jacobian(f, g, dx, dy, _num_threads)
    return numpy_backend.arakawa_jacobian(f, g, dx, dy)


def lorentz_gamma_2d(px: np.ndarray, py: np.ndarray, inv_c2: float) -> np.ndarray:
    if _ext is not None:
        return _ext.lorentz_gamma_2d(px, py, inv_c2, _num_threads)
    return numpy_backend.lorentz_gamma_2d(px, py, inv_c2)
