"""Optional numba acceleration.

Hot kernels are written once as plain Python/numpy loops and decorated with
:func:`njit`.  When numba is importable and ``FIDE_NUMBA`` is not set to
``0``, the decorator compiles them; otherwise it returns the function
unchanged and callers dispatch to the vectorised numpy twin instead.
"""

from __future__ import annotations

import os

_flag = os.environ.get("FIDE_NUMBA", "1").strip().lower()
_requested = _flag not in ("0", "false", "no", "off")

try:
    if not _requested:
        raise ImportError
    import numba as _numba
except ImportError:  # pragma: no cover - depends on environment
    _numba = None

USE_NUMBA: bool = _numba is not None


def njit(*args, **kwargs):
    """``numba.njit`` when acceleration is enabled, identity otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def worker_count() -> int:
    """Worker cap from ``FIDE_THREADS`` (0 or unset means all cores)."""
    try:
        n = int(os.environ.get("FIDE_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)
