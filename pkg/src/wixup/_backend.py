"""Kernel backend selection.

The hot kernels (profile accumulation, intersection scan, kernel-weighted
averaging) exist twice: a compiled Cython extension (`wixup._kernels`) and a
pure-Python reference (`wixup._kernels_py`). The compiled one is preferred at
import time; set WIXUP_BACKEND=python to force the fallback, or
WIXUP_BACKEND=compiled to fail loudly when the extension is missing.
"""

import os

from . import _kernels_py


def _load_compiled():
    from . import _kernels  # noqa: PLC0415 - deferred, may be absent

    return _kernels


def _select():
    forced = os.environ.get("WIXUP_BACKEND", "").strip().lower()
    if forced == "python":
        return _kernels_py
    if forced == "compiled":
        return _load_compiled()
    if forced not in ("", "auto"):
        raise ValueError("WIXUP_BACKEND must be 'compiled', 'python' or 'auto'")
    try:
        return _load_compiled()
    except ImportError:
        return _kernels_py


kernels = _select()
BACKEND = kernels.NAME


def available_backends():
    names = ["python"]
    try:
        _load_compiled()
    except ImportError:
        pass
    else:
        names.insert(0, "compiled")
    return names


def get_kernels(name="auto"):
    """Return a kernel module by name ('auto' = the active backend)."""
    if name in ("auto", None, ""):
        return kernels
    if name == "python":
        return _kernels_py
    if name == "compiled":
        return _load_compiled()
    raise ValueError(f"unknown backend {name!r}")
