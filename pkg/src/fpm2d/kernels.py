"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy
fallback is used.  ``FPM2D_KERNELS=python`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("FPM2D_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "compiled"

IMPLEMENTATIONS = {"python": _kernels_py}
try:
    from . import _kernels as _ck

    IMPLEMENTATIONS["compiled"] = _ck
except ImportError:  # pragma: no cover
    pass


def get(name: str | None = None):
    """Kernel module by name; ``None`` returns the active one."""
    if name is None:
        return _impl
    try:
        return IMPLEMENTATIONS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None
