"""Pick the compiled kernels when available, else the numpy fallback.

Set ``BURGERS_ALPHA_PURE=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("BURGERS_ALPHA_PURE", "") not in ("", "0"):
    kernels = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as kernels
        COMPILED = True
    except ImportError:  # extension not built
        kernels = _kernels_py
        COMPILED = False

BACKEND = "cython" if COMPILED else "python"
