"""Kernel backend selection.

Two interchangeable kernel implementations exist: a Cython extension
(``kellyalloc._kernels``) and a NumPy fallback (``kellyalloc._kernels_py``).
The compiled one is preferred when its import succeeds; otherwise the
fallback is used transparently. The environment variable
``KELLYALLOC_BACKEND`` (``compiled``, ``python``, or ``auto``) overrides the
choice at import time, and :func:`select_backend` switches it at runtime,
which the benchmark suite uses to compare both on identical inputs.
"""

from __future__ import annotations

import os
import warnings

from . import _kernels_py

STATUS_OK = _kernels_py.STATUS_OK
STATUS_SINGULAR = _kernels_py.STATUS_SINGULAR
STATUS_MAX_ITERATIONS = _kernels_py.STATUS_MAX_ITERATIONS
STATUS_DOMAIN = _kernels_py.STATUS_DOMAIN
STATUS_NONFINITE = _kernels_py.STATUS_NONFINITE

_BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _kernels_compiled
except ImportError:
    _kernels_compiled = None
else:
    _BACKENDS["compiled"] = _kernels_compiled


def available_backends() -> tuple[str, ...]:
    """Names of the backends importable in this installation."""
    return tuple(sorted(_BACKENDS))


def _resolve(name: str) -> str:
    if name in ("", "auto"):
        return "compiled" if "compiled" in _BACKENDS else "python"
    if name not in _BACKENDS:
        raise ValueError(
            f"unknown or unavailable backend {name!r}; "
            f"available: {', '.join(available_backends())}"
        )
    return name


def _initial_backend() -> str:
    requested = os.environ.get("KELLYALLOC_BACKEND", "auto").strip().lower()
    try:
        return _resolve(requested)
    except ValueError:
        warnings.warn(
            f"KELLYALLOC_BACKEND={requested!r} is not available; "
            "falling back to automatic selection",
            RuntimeWarning,
            stacklevel=2,
        )
        return _resolve("auto")


_active_name = _initial_backend()


def select_backend(name: str) -> str:
    """Switch the active kernel backend; returns the previous backend name."""
    global _active_name
    previous = _active_name
    _active_name = _resolve(name.strip().lower())
    return previous


def backend_name() -> str:
    """Name of the currently active kernel backend."""
    return _active_name


def kernels():
    """The active kernel module."""
    return _BACKENDS[_active_name]


def kernels_for(name: str):
    """A specific kernel module by name (used by worker processes)."""
    return _BACKENDS[_resolve(name.strip().lower())]
