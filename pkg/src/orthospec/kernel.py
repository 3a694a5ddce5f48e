"""Backend selection for the element-enumeration kernel.

The compiled extension is used when it imports; setting
``ORTHOSPEC_PURE_PYTHON=1`` forces the reference implementation.
"""

from __future__ import annotations

import os

from . import _pykernel
from ._pykernel import KernelPrecisionError, orbit_coords

BACKEND = "python"
enumerate_ball = _pykernel.enumerate_ball

if os.environ.get("ORTHOSPEC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._ckernel import enumerate_ball  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

__all__ = ["BACKEND", "enumerate_ball", "orbit_coords", "KernelPrecisionError", "backends"]


def backends() -> dict:
    """Every importable implementation, keyed by name (used by tests and benchmarks)."""
    out = {"python": _pykernel.enumerate_ball}
    try:
        from ._ckernel import enumerate_ball as c_enum

        out["cython"] = c_enum
    except ImportError:
        pass
    return out
