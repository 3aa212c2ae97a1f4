"""Backend selection for the compiled kernels.

Kernels are compiled with numba when it is importable. Setting the
environment variable ``PRIMEPOINTS_DISABLE_NUMBA=1`` routes every dispatch
through the vectorised numpy implementations instead.
"""
from __future__ import annotations

import contextlib
import os

ENV_FLAG = "PRIMEPOINTS_DISABLE_NUMBA"

try:
    import numba
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False


def _env_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


_backend = "numba" if NUMBA_AVAILABLE and not _env_disabled() else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with caching, or an identity decorator without numba."""
    if not NUMBA_AVAILABLE:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def backend() -> str:
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily switch the kernel backend."""
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def set_threads(n: int) -> None:
    if NUMBA_AVAILABLE and n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
