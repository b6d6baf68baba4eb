"""Kernel backend selection.

The compiled core (``nklab._kernels``) is used when it imports; otherwise
the pure-Python kernels are used.  Setting ``NKLAB_PURE_PYTHON=1`` forces the
fallback.  Both backends produce bit-identical results.
"""
from __future__ import annotations

import os

from . import _pykernels

kernels = _pykernels
NAME = "python"

if os.environ.get("NKLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        NAME = "cython"

__all__ = ["kernels", "NAME"]
