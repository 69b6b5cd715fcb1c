"""Numba switch.

Kernels in :mod:`boxdim.kernels` are decorated with :func:`njit` from this
module.  Setting ``BOXDIM_DISABLE_NUMBA=1`` (or running without numba
installed) turns the decorator into a no-op, so the same source runs as plain
numpy/Python.
"""

import logging
import os

logger = logging.getLogger(__name__)

_DISABLED = os.environ.get("BOXDIM_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError("disabled by BOXDIM_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)

except ImportError as exc:
    logger.debug("numba unavailable (%s); kernels run uncompiled", exc)
    HAVE_NUMBA = False

    def njit(pyfunc=None, **kwargs):
        def wrap(func):
            return func

        return wrap if pyfunc is None else wrap(pyfunc)


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
