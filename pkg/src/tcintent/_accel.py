"""JIT switch for the numeric kernels.

Kernels are written once in the numba-compatible subset of Python. When numba
is importable and ``TCINTENT_DISABLE_NUMBA`` is unset they are compiled with
``numba.njit``; otherwise the same functions run as plain Python over numpy
arrays. Both paths produce identical results.
"""

import os

_FALSEY = {"", "0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_DISABLED = os.environ.get("TCINTENT_DISABLE_NUMBA", "").strip().lower() not in _FALSEY
USE_NUMBA = numba is not None and not NUMBA_DISABLED


def njit(fn):
    """Compile ``fn`` with numba when enabled, else return it unchanged."""
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def python_impl(fn):
    """The uncompiled Python function behind a kernel (for benchmarks and parity tests)."""
    return getattr(fn, "py_func", fn)
