# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled gate kernels over batches of statevectors.

States are C-contiguous ``(batch, 2**n)`` complex128 arrays. Qubit ``q`` maps
to bit ``n - 1 - q`` of the basis index (qubit 0 is the most significant bit).
Gate matrices act on the local basis ``|bit(q_a) bit(q_b)>``.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


cdef inline Py_ssize_t _insert_zero(Py_ssize_t i, int pos) nogil:
    return ((i >> pos) << (pos + 1)) | (i & ((<Py_ssize_t>1 << pos) - 1))


def apply_1q(cplx[:, ::1] psi, cplx[:, ::1] u, int q, int n):
    cdef Py_ssize_t batch = psi.shape[0]
    cdef Py_ssize_t half = psi.shape[1] >> 1
    cdef int p = n - 1 - q
    cdef Py_ssize_t m = <Py_ssize_t>1 << p
    cdef cplx u00 = u[0, 0], u01 = u[0, 1], u10 = u[1, 0], u11 = u[1, 1]
    cdef Py_ssize_t b, k, i0, i1
    cdef cplx a0, a1
    with nogil:
        for b in range(batch):
            for k in range(half):
                i0 = _insert_zero(k, p)
                i1 = i0 | m
                a0 = psi[b, i0]
                a1 = psi[b, i1]
                psi[b, i0] = u00 * a0 + u01 * a1
                psi[b, i1] = u10 * a0 + u11 * a1


def apply_2q(cplx[:, ::1] psi, cplx[:, ::1] u, int qa, int qb, int n):
    cdef Py_ssize_t batch = psi.shape[0]
    cdef Py_ssize_t quarter = psi.shape[1] >> 2
    cdef int pa = n - 1 - qa
    cdef int pb = n - 1 - qb
    cdef int lo = pa if pa < pb else pb
    cdef int hi = pb if pa < pb else pa
    cdef Py_ssize_t ma = <Py_ssize_t>1 << pa
    cdef Py_ssize_t mb = <Py_ssize_t>1 << pb
    cdef Py_ssize_t b, k, base
    cdef Py_ssize_t idx[4]
    cdef cplx a[4]
    cdef cplx acc
    cdef cplx uu[4][4]
    cdef int r, c
    for r in range(4):
        for c in range(4):
            uu[r][c] = u[r, c]
    with nogil:
        for b in range(batch):
            for k in range(quarter):
                base = _insert_zero(_insert_zero(k, lo), hi)
                idx[0] = base
                idx[1] = base | mb
                idx[2] = base | ma
                idx[3] = base | ma | mb
                for c in range(4):
                    a[c] = psi[b, idx[c]]
                for r in range(4):
                    acc = uu[r][0] * a[0]
                    for c in range(1, 4):
                        acc = acc + uu[r][c] * a[c]
                    psi[b, idx[r]] = acc


def outer_1q(cplx[:, ::1] g, cplx[:, ::1] psi, int q, int n):
    """Per-sample ``M[b, i, j] = sum_rest conj(g[b, i..]) * psi[b, j..]``."""
    cdef Py_ssize_t batch = psi.shape[0]
    cdef Py_ssize_t half = psi.shape[1] >> 1
    cdef int p = n - 1 - q
    cdef Py_ssize_t m = <Py_ssize_t>1 << p
    out_arr = np.zeros((batch, 2, 2), dtype=np.complex128)
    cdef cplx[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, k, i0, i1
    cdef cplx g0, g1, a0, a1
    cdef cplx s00, s01, s10, s11
    with nogil:
        for b in range(batch):
            s00 = 0
            s01 = 0
            s10 = 0
            s11 = 0
            for k in range(half):
                i0 = _insert_zero(k, p)
                i1 = i0 | m
                g0 = g[b, i0].conjugate()
                g1 = g[b, i1].conjugate()
                a0 = psi[b, i0]
                a1 = psi[b, i1]
                s00 = s00 + g0 * a0
                s01 = s01 + g0 * a1
                s10 = s10 + g1 * a0
                s11 = s11 + g1 * a1
            out[b, 0, 0] = s00
            out[b, 0, 1] = s01
            out[b, 1, 0] = s10
            out[b, 1, 1] = s11
    return out_arr


def outer_2q(cplx[:, ::1] g, cplx[:, ::1] psi, int qa, int qb, int n):
    """Two-qubit version of :func:`outer_1q`, shape ``(batch, 4, 4)``."""
    cdef Py_ssize_t batch = psi.shape[0]
    cdef Py_ssize_t quarter = psi.shape[1] >> 2
    cdef int pa = n - 1 - qa
    cdef int pb = n - 1 - qb
    cdef int lo = pa if pa < pb else pb
    cdef int hi = pb if pa < pb else pa
    cdef Py_ssize_t ma = <Py_ssize_t>1 << pa
    cdef Py_ssize_t mb = <Py_ssize_t>1 << pb
    out_arr = np.zeros((batch, 4, 4), dtype=np.complex128)
    cdef cplx[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, k, base
    cdef Py_ssize_t idx[4]
    cdef cplx gc[4]
    cdef cplx a[4]
    cdef cplx s[4][4]
    cdef int r, c
    with nogil:
        for b in range(batch):
            for r in range(4):
                for c in range(4):
                    s[r][c] = 0
            for k in range(quarter):
                base = _insert_zero(_insert_zero(k, lo), hi)
                idx[0] = base
                idx[1] = base | mb
                idx[2] = base | ma
                idx[3] = base | ma | mb
                for c in range(4):
                    gc[c] = g[b, idx[c]].conjugate()
                    a[c] = psi[b, idx[c]]
                for r in range(4):
                    for c in range(4):
                        s[r][c] = s[r][c] + gc[r] * a[c]
            for r in range(4):
                for c in range(4):
                    out[b, r, c] = s[r][c]
    return out_arr
