"""Backend selection: numba kernels by default, pure Python/numpy fallback.

Set EVOCTRL_BACKEND=numpy to force the fallback (e.g. on machines without a
working numba); EVOCTRL_BACKEND=numba to insist on the kernels. Every public
entry point also takes an explicit ``backend=`` argument which overrides the
environment flag.
"""

from __future__ import annotations

import os

_VALID = ("numba", "numpy")


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
        return True
    except ImportError:
        return False


def resolve_backend(backend: 'str | None' = None) -> str:
    name = backend or os.environ.get("EVOCTRL_BACKEND")
    if name is None:
        return "numba" if numba_available() else "numpy"
    name = name.lower()
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}; expected one of {_VALID}")
    if name == "numba" and not numba_available():
        raise RuntimeError("numba backend requested but numba is not importable")
    return name
