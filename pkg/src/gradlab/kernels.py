"""Select the winsorize kernel implementation at import time.

The compiled Cython core is preferred; the pure-numpy fallback is used when
the extension was not built or GRADLAB_PURE_PYTHON=1 is set.  Both expose
winsorized_outer_sum / winsorized_column_sum with identical semantics (up
to floating-point rounding order); benchmarks/bench_winsor.py compares
them.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_force_py = os.environ.get("GRADLAB_PURE_PYTHON", "0") == "1"

HAVE_COMPILED = _compiled is not None
USING_COMPILED = HAVE_COMPILED and not _force_py

active = _compiled if USING_COMPILED else _kernels_py

winsorized_outer_sum = active.winsorized_outer_sum
winsorized_column_sum = active.winsorized_column_sum

# compiled tracker cap; None means unlimited (fallback)
TRACKER_LIMIT = active.TRACKER_LIMIT


def default_threads() -> int:
    env = os.environ.get("GRADLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def supports_k(k: int) -> bool:
    return TRACKER_LIMIT is None or k <= TRACKER_LIMIT
