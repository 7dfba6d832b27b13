"""Numba acceleration shim.

The hot simulation kernels in :mod:`diffkf.kernels` are decorated with
``njit`` from this module.  When numba is installed and the environment
variable ``DIFFKF_DISABLE_NUMBA`` is unset (or falsy), the real compiler is
used.  Otherwise the decorator is a no-op and the kernels run as plain
numpy code, slower but numerically equivalent.

``benchmarks/bench_kernels.py`` compares both paths.
"""

import os

__all__ = ["njit", "NUMBA_ENABLED"]


def _disabled_by_env() -> bool:
    return os.environ.get("DIFFKF_DISABLE_NUMBA", "").strip().lower() in (
        "1", "true", "yes", "on",
    )


def _null_njit(*args, **kwargs):
    """No-op replacement for numba.njit (accepts the same call forms)."""
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap


NUMBA_ENABLED = False
njit = _null_njit

if not _disabled_by_env():
    try:
        from numba import njit  # noqa: F811

        NUMBA_ENABLED = True
    except ImportError:
        pass
