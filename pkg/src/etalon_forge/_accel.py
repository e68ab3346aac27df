"""JIT switch for the hot kernels.

Set ``ETALON_FORGE_DISABLE_NUMBA=1`` to force the pure-numpy code path, e.g. to
debug a kernel or to run where numba cannot compile.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested():
    return os.environ.get("ETALON_FORGE_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _numba_requested()


def njit(*args, **kwargs):
    """``numba.njit(cache=True, nogil=True)`` or a no-op when numba is absent."""
    if _njit is None:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    return _njit(*args, **kwargs)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
