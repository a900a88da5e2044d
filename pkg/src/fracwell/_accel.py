"""JIT switch.

Set ``FRACWELL_NUMBA=0`` before import to force the pure-numpy kernels.
When numba is missing the numpy path is used silently.
"""
import os

_requested = os.environ.get("FRACWELL_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    import numba as _nb
except ImportError:  # pragma: no cover - depends on environment
    _nb = None

NUMBA_ENABLED = bool(_requested and _nb is not None)


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, otherwise a no-op decorator."""
    if NUMBA_ENABLED:
        return _nb.njit(*args, cache=False, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
