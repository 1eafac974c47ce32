"""Backend selection for the gate kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy implementation in ``_pykernels``. Set ``QPLASTICITY_PURE_PYTHON=1`` to
force the fallback. :func:`use_backend` switches at runtime (tests and the
benchmark use it to exercise both paths).
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_active: ModuleType = (
    _pykernels
    if _ckernels is None or os.environ.get("QPLASTICITY_PURE_PYTHON") == "1"
    else _ckernels
)


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend_name() -> str:
    return "cython" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name: str) -> None:
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}") from None


def apply_1q(psi, u, q, n):
    _active.apply_1q(psi, u, q, n)


def apply_2q(psi, u, qa, qb, n):
    _active.apply_2q(psi, u, qa, qb, n)


def outer_1q(g, psi, q, n):
    return _active.outer_1q(g, psi, q, n)


def outer_2q(g, psi, qa, qb, n):
    return _active.outer_2q(g, psi, qa, qb, n)
