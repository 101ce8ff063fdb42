"""Selects the simplex pivot kernel at import time.

Prefers the compiled extension, falls back to the pure-Python twin.  Set
PERSUADE_PURE_PYTHON=1 to force the fallback (useful for benchmarking and
for debugging kernel parity).
"""

from __future__ import annotations

import os

from . import _pivot_py

if os.environ.get("PERSUADE_PURE_PYTHON"):
    _impl = _pivot_py
    KERNEL_NAME = "python"
else:
    try:
        from . import _pivot_cy as _impl  # type: ignore[no-redef]

        KERNEL_NAME = "compiled"
    except ImportError:
        _impl = _pivot_py
        KERNEL_NAME = "python"

run_simplex = _impl.run_simplex
OPTIMAL = _pivot_py.OPTIMAL
UNBOUNDED = _pivot_py.UNBOUNDED
ITERATION_LIMIT = _pivot_py.ITERATION_LIMIT
