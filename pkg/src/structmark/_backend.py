"""Compute-backend selection: compiled extension if available, numpy otherwise.

The choice happens once at import. Set STRUCTMARK_BACKEND=python to force the
fallback (e.g. for benchmarking or debugging); STRUCTMARK_BACKEND=cython makes
a missing extension a hard error instead of a silent downgrade.
"""

from __future__ import annotations

import os

from . import _pykernels

_requested = os.environ.get("STRUCTMARK_BACKEND", "").strip().lower()

if _requested == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _pykernels

score_codewords = _impl.score_codewords
fisher_yates = _impl.fisher_yates


def backend_name() -> str:
    """Name of the active kernel backend: "cython" or "python"."""
    return _impl.NAME
