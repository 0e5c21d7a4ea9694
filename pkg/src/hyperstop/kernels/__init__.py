"""Backend dispatch for the solver kernels.

Two interchangeable implementations: `numba` (default when importable)
and `numpy` (pure reference). Selection order:

1. explicit use_backend() call,
2. HYPERSTOP_BACKEND environment variable ("numba" or "numpy"),
3. numba if it imports, else numpy.

An explicit request for numba raises if numba is unavailable; the
implicit default falls back silently.
"""

import importlib
import os

_FORCED = None
_CACHE = {}


def _load(name):
    if name not in _CACHE:
        _CACHE[name] = importlib.import_module(f"{__name__}.{name}_impl")
    return _CACHE[name]


def _default_name():
    env = os.environ.get("HYPERSTOP_BACKEND", "").strip().lower()
    if env in ("numpy", "python"):
        return "numpy"
    if env == "numba":
        return "numba"
    if env:
        raise ValueError(f"unknown HYPERSTOP_BACKEND value: {env!r}")
    try:
        importlib.import_module("numba")
        return "numba"
    except ImportError:
        return "numpy"


def current_backend() -> str:
    return _FORCED if _FORCED is not None else _default_name()


def impl():
    """Return the active kernel module."""
    return _load(current_backend())


def use_backend(name):
    """Force a backend ("numba", "numpy", or None to restore defaults)."""
    global _FORCED
    if name is not None:
        name = name.strip().lower()
        if name == "python":
            name = "numpy"
        if name not in ("numba", "numpy"):
            raise ValueError(f"unknown backend: {name!r}")
        _load(name)  # fail early if unavailable
    _FORCED = name
