"""Numba switch.

Hot kernels are written once as plain Python loops and compiled with
``numba.njit`` when available.  Setting ``BGKBARO_NUMBA=0`` in the
environment (before import) selects the vectorized numpy fallbacks instead.
"""
import os

try:
    import numba
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

_FLAG = os.environ.get("BGKBARO_NUMBA", "1").strip().lower()
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("0", "false", "no", "off")


def njit(func):
    """Compile ``func`` with numba in nopython mode, or return it unchanged."""
    if NUMBA_AVAILABLE:
        return numba.njit(cache=True, fastmath=False)(func)
    return func
