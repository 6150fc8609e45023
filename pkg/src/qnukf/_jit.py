"""Backend switch for the hot kernels.

Set ``QNUKF_DISABLE_NUMBA=1`` to force the vectorised numpy path even when
numba is importable.
"""

import os

_flag = os.environ.get("QNUKF_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag in ("1", "true", "yes", "on")

try:
    if _disabled:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled


def jit(func):
    """``numba.njit(cache=True)`` when numba is available, identity otherwise."""
    if numba is None:
        return func
    return numba.njit(cache=True)(func)
