"""Backend selection for the dual-number kernels.

The compiled extension is preferred when present; the pure-Python fallback is
behaviorally identical for flat (float-coefficient) duals.  Set
``AMDYN_PURE_PYTHON=1`` to force the fallback, e.g. for the backend benchmark.
"""

from __future__ import annotations

import os

import numpy as np

from . import _dualpy

PyDual = _dualpy.Dual

if os.environ.get("AMDYN_PURE_PYTHON", "") not in ("", "0"):
    Dual = PyDual
    BACKEND = "python"
else:
    try:
        from ._dualcore import Dual  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        Dual = PyDual
        BACKEND = "python"


def value(x):
    """Value part of x, unwrapping nested duals of either backend."""
    while hasattr(x, "val"):
        x = x.val
    return x


def partials(x, n: int) -> np.ndarray:
    """First-order partials of x as a length-n float vector (0 for constants)."""
    if hasattr(x, "eps"):
        return np.asarray([value(e) for e in np.atleast_1d(x.eps)], dtype=float)
    return np.zeros(n)
