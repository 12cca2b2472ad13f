"""Kernel backend selection.

The compiled extension ``kroncov._kernels`` is preferred; the pure-numpy
module ``kroncov._kernels_py`` is the drop-in fallback.  Selection happens
once at import and can be forced with the environment variable
``KRONCOV_BACKEND`` set to ``c`` or ``py``.
"""

import os
import warnings

from . import _kernels_py

_forced = os.environ.get("KRONCOV_BACKEND", "").lower()

if _forced == "py":
    kernels = _kernels_py
elif _forced == "c":
    from . import _kernels as kernels  # noqa: F401  (raises if not built)
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        warnings.warn(
            "compiled kernels unavailable; using the pure-python fallback "
            "(slower, numerically equivalent)",
            RuntimeWarning,
            stacklevel=2,
        )
        kernels = _kernels_py

BACKEND_NAME = kernels.BACKEND


def backend_name():
    """Name of the active kernel backend: 'c' or 'python'."""
    return BACKEND_NAME
