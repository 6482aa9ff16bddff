"""Pick the kernel implementation at import time.

The compiled ``_core`` extension is used when it was built; otherwise (or when
``MMRL_PURE_PYTHON=1``) the numpy fallback is used.
"""

import os

from . import _fallback

if os.environ.get("MMRL_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as kernels

        BACKEND = "cython"
    except ImportError:
        kernels = _fallback
        BACKEND = "python"

__all__ = ["kernels", "BACKEND", "_fallback"]
