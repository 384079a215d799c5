"""Backend switch for the compiled kernels.

Hot loops are written twice: a numba ``@njit`` version and a vectorised
numpy version.  Set ``TFLAB_NO_NUMBA=1`` to force the numpy path (useful
for debugging and for the backend benchmark).
"""
from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and os.environ.get("TFLAB_NO_NUMBA", "").lower() not in {
    "1",
    "true",
    "yes",
}


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise.

    Kernels decorated with this are always compiled when numba exists, so the
    numba and numpy paths can be compared inside one process.  Which one the
    library *calls* is decided by :data:`USE_NUMBA`.
    """
    opts = {"cache": True}
    opts.update(kwargs)

    def wrap(f):
        if HAS_NUMBA:
            return numba.njit(**opts)(f)
        return f

    if func is None:
        return wrap
    return wrap(func)


if HAS_NUMBA:
    # the system TBB may be too old for numba; prefer the other layers
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def pick(numba_impl, numpy_impl):
    """Return the implementation selected by the backend flag."""
    return numba_impl if USE_NUMBA else numpy_impl
