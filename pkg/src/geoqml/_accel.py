"""Optional numba acceleration.

Set ``GEOQML_DISABLE_NUMBA=1`` in the environment to force the pure-numpy
kernels (useful for debugging, profiling and for platforms without numba).
"""

import os

try:
    import numba as nb

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    nb = None
    _HAVE_NUMBA = False


def _flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


NUMBA_ENABLED = _HAVE_NUMBA and not _flag("GEOQML_DISABLE_NUMBA")


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    Kernels are always compiled when numba exists so the benchmark can compare
    both paths in one process; the env flag only controls dispatch.
    """
    if _HAVE_NUMBA:
        return nb.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func
