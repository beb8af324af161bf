"""Numba switch.

Set ``MAMCAST_DISABLE_NUMBA=1`` to run every kernel through its pure-numpy
path. Numba is optional; without it the numpy path is used unconditionally.
"""
import os

_FLAG = os.environ.get("MAMCAST_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

HAVE_NUMBA = _numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is installed, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func


def pick(numba_impl, numpy_impl):
    return numba_impl if USE_NUMBA else numpy_impl
