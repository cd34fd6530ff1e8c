"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
module takes over. ``use_backend`` switches explicitly (tests, benchmarks).
"""

from __future__ import annotations

from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active: ModuleType = _compiled or _kernels_py


def backend() -> str:
    return "compiled" if _active is _compiled else "python"


def compiled_available() -> bool:
    return _compiled is not None


def use_backend(name: str) -> None:
    global _active
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built")
        _active = _compiled
    elif name == "python":
        _active = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")


def value_iteration(*args):
    return _active.value_iteration(*args)


def backward_reachable(*args):
    return _active.backward_reachable(*args)
