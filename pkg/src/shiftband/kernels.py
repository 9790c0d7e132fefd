"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy fallback
is used.  ``SHIFTBAND_KERNELS=python`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SHIFTBAND_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        _impl = _compiled

first_trigger = _impl.first_trigger
scan_range = _impl.scan_range
scan_dyadic = _impl.scan_dyadic

__all__ = ["BACKEND", "first_trigger", "scan_range", "scan_dyadic"]
