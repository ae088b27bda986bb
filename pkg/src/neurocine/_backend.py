"""Kernel backend selection.

Hot loops exist twice: a numba ``@njit`` kernel and a vectorized numpy
fallback. Set ``NEUROCINE_NUMBA=0`` to force the numpy path (also used
automatically when numba is missing). ``NEUROCINE_THREADS`` caps the
worker count used by fold- and trial-level parallelism.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FALSY = {"0", "false", "no", "off"}

_use_numba = numba is not None and os.environ.get("NEUROCINE_NUMBA", "1").strip().lower() not in _FALSY


def njit(*args, **kwargs):
    """``numba.njit`` with on-disk caching, or the identity without numba."""
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def use_numba() -> bool:
    return _use_numba


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` kernels at runtime."""
    global _use_numba
    if name == "numba":
        if numba is None:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")


@contextmanager
def backend(name: str):
    previous = "numba" if _use_numba else "numpy"
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def max_workers() -> int:
    raw = os.environ.get("NEUROCINE_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
