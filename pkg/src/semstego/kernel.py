"""Interval-walk kernel selection.

The compiled Cython kernel is preferred when it imported cleanly; the
pure-Python kernel is the fallback and the reference.  Set
``SEMSTEGO_KERNEL=pure`` (or ``compiled``) to force a backend.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernel_py

_KERNELS: dict[str, ModuleType] = {"pure": _kernel_py}

try:  # pragma: no cover - exercised only when the extension is built
    from . import _kernel_cy

    _KERNELS["compiled"] = _kernel_cy
except ImportError:
    _kernel_cy = None

_forced = os.environ.get("SEMSTEGO_KERNEL", "").strip().lower()
if _forced:
    if _forced not in _KERNELS:
        raise ImportError(
            f"SEMSTEGO_KERNEL={_forced!r} requested but only {sorted(_KERNELS)} available"
        )
    active_name = _forced
else:
    active_name = "compiled" if "compiled" in _KERNELS else "pure"

active = _KERNELS[active_name]


def available() -> dict[str, ModuleType]:
    """All importable kernels, keyed by name."""
    return dict(_KERNELS)
