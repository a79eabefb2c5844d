"""Kernel backend selection.

Hot inner loops exist in two equivalent implementations: a numba ``@njit``
version and a pure-numpy fallback. The active backend is chosen once at
import time from the environment variable ``LEVYSUP_BACKEND``:

    LEVYSUP_BACKEND=numba   use numba if importable (default)
    LEVYSUP_BACKEND=numpy   force the vectorized numpy path

``benchmarks/backend_bench.py`` compares the two on identical inputs.
"""

from __future__ import annotations

import os

_choice = os.environ.get("LEVYSUP_BACKEND", "numba").strip().lower()
if _choice not in ("numba", "numpy"):
    raise RuntimeError(
        f"LEVYSUP_BACKEND must be 'numba' or 'numpy', got {_choice!r}"
    )

HAVE_NUMBA = False
if _choice == "numba":
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _choice == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when the numba backend is active, identity otherwise."""
    if USE_NUMBA:
        import numba

        return numba.njit(*args, **kwargs)

    # Plain passthrough decorator; the numpy fallbacks never call these.
    def wrap(func):
        return func

    if args and callable(args[0]) and not kwargs:
        return args[0]
    return wrap
