"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``MEP_LAB_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("MEP_LAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"

eval_series = _impl.eval_series
eval_series_deriv = _impl.eval_series_deriv
invert_shift = _impl.invert_shift


def backends() -> dict:
    """All importable backends by name, for benchmarks and cross-checks."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        found["compiled"] = _compiled
    return found
