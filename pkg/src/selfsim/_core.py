"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting ``SELFSIM_PURE=1``
forces the numpy fallback.
"""

import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("SELFSIM_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        kernels = _fallback

omega2_series = kernels.omega2_series
shift_sum_lagrange = kernels.shift_sum_lagrange
box_count = kernels.box_count


def thread_cap() -> int:
    """Worker cap from ``SELFSIM_THREADS`` (defaults to the CPU count)."""
    raw = os.environ.get("SELFSIM_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
