"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``DEGENWAVE_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

kernels = _kernels_py
name = "python"

if os.environ.get("DEGENWAVE_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        name = "compiled"


def get(backend=None):
    """Kernel module for ``backend`` ('compiled', 'python' or None for the default)."""
    if backend is None:
        return kernels
    if backend == "python":
        return _kernels_py
    if backend == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {backend!r}")
