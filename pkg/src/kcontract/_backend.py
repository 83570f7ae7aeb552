"""Kernel backend selection: compiled extension when available, numpy fallback.

Set KCONTRACT_BACKEND=python or =cython to force a choice (forcing cython
raises if the extension is not built).
"""

import os

from . import _kernels_py
from .config import BACKEND_ENV_VAR

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None


def _select():
    forced = os.environ.get(BACKEND_ENV_VAR)
    if forced == "python":
        return _kernels_py
    if forced == "cython":
        if _compiled is None:
            raise ImportError(
                "KCONTRACT_BACKEND=cython but the compiled kernels are not built"
            )
        return _compiled
    if forced not in (None, ""):
        raise ValueError(f"unknown {BACKEND_ENV_VAR}={forced!r}")
    return _compiled if _compiled is not None else _kernels_py


kernels = _select()
BACKEND_NAME = kernels.BACKEND_NAME


def available_backends() -> list[str]:
    out = [_kernels_py.BACKEND_NAME]
    if _compiled is not None:
        out.insert(0, _compiled.BACKEND_NAME)
    return out


def backend_module(name: str):
    """Kernel module by backend name; used by tests and the benchmark."""
    for mod in (_compiled, _kernels_py):
        if mod is not None and mod.BACKEND_NAME == name:
            return mod
    raise ValueError(f"unknown or unavailable backend {name!r}")
