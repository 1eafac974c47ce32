"""Pure-numpy gate kernels; same contract as ``_ckernels``.

Every function works on C-contiguous ``(batch, 2**n)`` complex128 arrays and
mutates ``psi`` in place (``apply_*``) or returns per-sample local outer
products (``outer_*``).
"""
from __future__ import annotations

import numpy as np


def apply_1q(psi: np.ndarray, u: np.ndarray, q: int, n: int) -> None:
    batch = psi.shape[0]
    view = psi.reshape(batch, 1 << q, 2, 1 << (n - q - 1))
    view[...] = np.matmul(u, view)


def _pair_view(psi: np.ndarray, qa: int, qb: int, n: int) -> np.ndarray:
    lo, hi = min(qa, qb), max(qa, qb)
    return psi.reshape(psi.shape[0], 1 << lo, 2, 1 << (hi - lo - 1), 2, 1 << (n - hi - 1))


def apply_2q(psi: np.ndarray, u: np.ndarray, qa: int, qb: int, n: int) -> None:
    view = _pair_view(psi, qa, qb, n)
    u4 = u.reshape(2, 2, 2, 2)
    if qa < qb:
        out = np.einsum("ijkl,xakcld->xaicjd", u4, view)
    else:
        out = np.einsum("ijkl,xalckd->xajcid", u4, view)
    view[...] = out


def outer_1q(g: np.ndarray, psi: np.ndarray, q: int, n: int) -> np.ndarray:
    batch = psi.shape[0]
    shape = (batch, 1 << q, 2, 1 << (n - q - 1))
    return np.einsum("xaic,xajc->xij", g.reshape(shape).conj(), psi.reshape(shape))


def outer_2q(g: np.ndarray, psi: np.ndarray, qa: int, qb: int, n: int) -> np.ndarray:
    gv = _pair_view(g, qa, qb, n).conj()
    pv = _pair_view(psi, qa, qb, n)
    if qa < qb:
        m = np.einsum("xaicjd,xakcld->xijkl", gv, pv)
    else:
        m = np.einsum("xajcid,xalckd->xijkl", gv, pv)
    return m.reshape(psi.shape[0], 4, 4)
