"""Kernel dispatch: compiled Cython module when built, Python otherwise.

Set ``TCMPS_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
ar1_filter = _kernels_py.ar1_filter
fuse_gates = _kernels_py.fuse_gates

if os.environ.get("TCMPS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        ar1_filter = _kernels.ar1_filter
        fuse_gates = _kernels.fuse_gates

RZ, H, CRZ, SWAP = _kernels_py.RZ, _kernels_py.H, _kernels_py.CRZ, _kernels_py.SWAP

__all__ = ["BACKEND", "ar1_filter", "fuse_gates", "RZ", "H", "CRZ", "SWAP"]
