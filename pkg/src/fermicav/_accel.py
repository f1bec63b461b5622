"""Optional numba acceleration.

Set ``FERMICAV_NUMBA=0`` in the environment to run every kernel as plain
Python/NumPy. The flag is read once at import time.
"""
import os

_FLAG = os.environ.get("FERMICAV_NUMBA", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "off", "no")


def jit(fn):
    """Compile ``fn`` in nopython mode when acceleration is enabled."""
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def python_impl(fn):
    """Return the uncompiled Python function behind a (possibly) jitted kernel."""
    return getattr(fn, "py_func", fn)
