"""Kernel backend selection.

Hot inner loops (stream generation, array sampling, Prohorov subset probes)
exist twice: a numba @njit implementation and a pure-numpy fallback with
bit-identical integer semantics.  The active backend is chosen once at
import time:

* ``ROWEX_BACKEND=numpy``  forces the pure-numpy path,
* ``ROWEX_BACKEND=numba``  requires numba and fails loudly if it is missing,
* unset/auto               uses numba when importable, numpy otherwise.
"""
from __future__ import annotations

import os

_ENV_VAR = "ROWEX_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def _select() -> str:
    choice = os.environ.get(_ENV_VAR, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise ImportError(
                f"{_ENV_VAR}=numba requested but numba is not importable"
            )
        return "numba"
    raise ValueError(f"unrecognized {_ENV_VAR}={choice!r}; use numba|numpy|auto")


ACTIVE = _select()


def using_numba() -> bool:
    return ACTIVE == "numba"
