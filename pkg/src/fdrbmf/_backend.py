"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``FDRBMF_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("FDRBMF_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
