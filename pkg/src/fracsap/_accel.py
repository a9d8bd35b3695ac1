"""Numba toggle.

Hot kernels are compiled with numba unless ``FRACSAP_DISABLE_NUMBA`` is set to a
truthy value (or numba is not importable), in which case the pure-numpy
implementations are used instead.
"""

import os

_FLAG = os.environ.get("FRACSAP_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

NUMBA_ENABLED = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` with ``nogil`` and ``cache`` on by default."""
    kwargs.setdefault("nogil", True)
    kwargs.setdefault("cache", True)
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
