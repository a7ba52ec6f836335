"""Kernel dispatch: the compiled extension when available, else pure Python.

Set ``GDPROP_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("GDPROP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pykernels

IMPLEMENTATION: str = _impl.IMPLEMENTATION


def _clamp(m: int, cap: int) -> int:
    return min(m, 2 * cap + 1)


def knapsack_merge(prev: list[int], child: list[int], cap: int) -> tuple[list[int], list[int]]:
    return _impl.knapsack_merge(list(prev), list(child), cap)


def cross_fold(c1: list[int], m1: int, c2: list[int], m2: int, cap: int) -> tuple[list[int], list[int], list[int]]:
    return _impl.cross_fold(list(c1), _clamp(m1, cap), list(c2), _clamp(m2, cap), cap)


def cover_profile(masks: list[int], max_size: int, target: int = -1) -> list[tuple[int, ...]]:
    return _impl.cover_profile(list(masks), max_size, target)


def available() -> dict[str, object]:
    """Both implementations that can be loaded, keyed by name."""
    impls: dict[str, object] = {"python": _pykernels}
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        impls["cython"] = _ckernels
    return impls
