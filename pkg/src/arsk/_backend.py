"""Select the kernel implementation at import time.

The compiled extension is used when it imports cleanly; setting
``ARSK_BACKEND=python`` forces the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("ARSK_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get_kernels(name=None):
    """Return the kernel module for `name` ("python", "cython" or None for the default)."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
