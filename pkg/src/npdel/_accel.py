"""Backend selection for the compiled kernels.

Set ``NPDEL_DISABLE_NUMBA=1`` to force the pure-numpy paths even when numba
is importable. The flag is read once at import time; ``use_numba()`` reports
the effective choice.
"""

import os

_DISABLED = os.environ.get("NPDEL_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None


def use_numba():
    return HAVE_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is present, identity otherwise.

    Functions are always compiled when numba is importable so the benchmark
    can compare both backends in one process; the env flag only changes which
    implementation the public API dispatches to.
    """
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def prange(*args):
    if _numba is None:
        return range(*args)
    return _numba.prange(*args)
