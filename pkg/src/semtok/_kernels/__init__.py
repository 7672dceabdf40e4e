"""Kernel backend selection.

The compiled Cython core is used when present; otherwise the numpy
implementations take over. Set ``SEMTOK_PURE_PYTHON=1`` to force the
numpy backend (useful for benchmarking and debugging).
"""

import os

from . import pure

_FORCED_PURE = bool(os.environ.get("SEMTOK_PURE_PYTHON"))

if _FORCED_PURE:
    _impl = pure
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = pure
        BACKEND = "python"

assign_cosine = _impl.assign_cosine
assign_euclidean = _impl.assign_euclidean
accumulate_rows = _impl.accumulate_rows
min_dist_update_cosine = _impl.min_dist_update_cosine
min_dist_update_euclidean = _impl.min_dist_update_euclidean
nearest_neighbor_cosine = _impl.nearest_neighbor_cosine
infonce_loss_grad = _impl.infonce_loss_grad


def available_backends() -> dict:
    """Importable backends by name; always includes ``python``."""
    backends = {"python": pure}
    try:
        from . import _core

        backends["compiled"] = _core
    except ImportError:
        pass
    return backends
