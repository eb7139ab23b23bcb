"""Backend selection for the hot kernels.

Two implementations of the inner-integral kernel exist: a numba-compiled
loop and a vectorised numpy version.  ``RELZETA_BACKEND=numpy`` forces the
numpy path; the default is numba whenever it imports.
"""
from __future__ import annotations

import importlib.util
import os

HAVE_NUMBA = importlib.util.find_spec("numba") is not None

_VALID = ("numba", "numpy")


def default_backend() -> str:
    requested = os.environ.get("RELZETA_BACKEND", "numba").strip().lower()
    if requested not in _VALID:
        raise ValueError(f"RELZETA_BACKEND must be one of {_VALID}, got {requested!r}")
    if requested == "numba" and not HAVE_NUMBA:
        return "numpy"
    return requested


def resolve(backend: str | None) -> str:
    if backend is None:
        return default_backend()
    if backend not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend
