"""Backend selection for the hot kernels.

Numba is used when importable unless ``OSTROVSKY_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel falls back to its numpy twin.
"""

import os

_FALSEY = {"", "0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get(
    "OSTROVSKY_DISABLE_NUMBA", "0").strip().lower() in _FALSEY


def njit(fn):
    """Compile ``fn`` in nopython mode, or return it untouched without numba."""
    if numba is None:
        return fn
    return numba.njit(cache=True)(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
