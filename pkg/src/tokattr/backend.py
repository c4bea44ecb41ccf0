"""Numeric backend selection for the hot kernels.

The coalition-combination kernels come in two flavours: numba ``@njit``
machine code and a pure-numpy fallback. Selection happens once at import
time from the ``TOKATTR_NUMBA`` environment variable:

* unset / ``1`` / ``true``  -> use numba when it imports cleanly;
* ``0`` / ``false`` / ``no`` -> force the numpy fallback.

``benchmarks/bench_kernels.py`` compares the two paths.
"""

from __future__ import annotations

import os

_FALSY = {"0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("TOKATTR_NUMBA", "1").strip().lower() not in _FALSY


NUMBA_AVAILABLE = False
if _numba_requested():
    try:
        import numba  # noqa: F401

        NUMBA_AVAILABLE = True
    except ImportError:
        NUMBA_AVAILABLE = False

NUMBA_ENABLED = NUMBA_AVAILABLE


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
