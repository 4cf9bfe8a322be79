"""Import-time selection of the search kernel.

The compiled Cython kernel is preferred when the extension built; the
pure NumPy kernel is the fallback. ``SONAHUNT_PURE_PYTHON=1`` forces the
fallback regardless (useful for benchmarking the two against each other).

Both kernels implement the same algorithm with the same deterministic
tie-breaking; they may differ in the last float ulp because accumulation
order differs, so graphs built by different kernels are each valid but
not guaranteed identical.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernel_py

try:
    from . import _kernel as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None


def available_kernels() -> dict[str, ModuleType]:
    kernels: dict[str, ModuleType] = {_kernel_py.NAME: _kernel_py}
    if _compiled is not None:
        kernels[_compiled.NAME] = _compiled
    return kernels


def default_kernel() -> ModuleType:
    if os.environ.get("SONAHUNT_PURE_PYTHON") == "1" or _compiled is None:
        return _kernel_py
    return _compiled


def get_kernel(name: str | None = None) -> ModuleType:
    if name is None:
        return default_kernel()
    kernels = available_kernels()
    if name not in kernels:
        raise ValueError(f"unknown kernel {name!r}; available: {sorted(kernels)}")
    return kernels[name]


ACTIVE_KERNEL_NAME = default_kernel().NAME
