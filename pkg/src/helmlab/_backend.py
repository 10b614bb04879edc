"""Pick the kernel implementation at import time.

The compiled extension is preferred; ``HELMLAB_BACKEND=python`` forces the
numpy fallback, ``HELMLAB_BACKEND=compiled`` makes a missing extension an
error instead of a silent fallback.
"""
import os

from . import _pykernels

_choice = os.environ.get("HELMLAB_BACKEND", "auto").lower()

if _choice == "python":
    kernels = _pykernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        if _choice == "compiled":
            raise
        kernels = _pykernels

BACKEND = "compiled" if kernels is not _pykernels else "python"


def available_backends():
    """Names and modules of every importable kernel implementation."""
    out = {"python": _pykernels}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["compiled"] = _kernels
    return out
