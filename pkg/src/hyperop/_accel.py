"""Numba dispatch.

Loop kernels are compiled whenever numba is importable; the public kernel
entry points use them only when ``USE_NUMBA`` is true.  Set
``HYPEROP_DISABLE_NUMBA=1`` before import to force the pure-numpy path.
"""

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("HYPEROP_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes")

NUMBA_OPTS = {"cache": True, "nogil": True}


def njit(func):
    if not HAS_NUMBA:
        return func
    return numba.njit(func, **NUMBA_OPTS)
