"""Kernel backend chosen at import.

``COALSIM_BACKEND`` may be ``c`` (require the compiled kernels), ``python``
(force the fallback) or unset (compiled when available).
"""
import os
from types import ModuleType

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def load(name: str) -> ModuleType:
    if name == "python":
        return _kernels_py
    if name == "c":
        if _ckernels is None:
            raise ImportError("compiled kernels requested but coalsim.sim._ckernels is not built")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}; use 'c' or 'python'")


def available() -> list[str]:
    return (["c"] if _ckernels is not None else []) + ["python"]


_choice = os.environ.get("COALSIM_BACKEND", "").strip().lower()
BACKEND = _choice if _choice else available()[0]
kernels = load(BACKEND)
