"""Optional numba acceleration.

Set ``CZRPE_DISABLE_NUMBA=1`` to run every kernel on its pure-numpy path.
The flag is read once at import time.
"""

import os

_DISABLED = os.environ.get("CZRPE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _njit = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator.

    Compiled functions keep the original Python function on ``.py_func``
    either way, so tests can compare both paths.
    """
    if _njit is not None:
        return _njit(*args, **kwargs)

    def decorate(fn):
        fn.py_func = fn
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return decorate(args[0])
    return decorate
