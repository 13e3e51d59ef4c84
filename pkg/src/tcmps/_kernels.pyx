# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_kernels_py.py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, cos, sin

cnp.import_array()

cdef enum:
    RZ = 0
    H = 1
    CRZ = 2
    SWAP = 3


def ar1_filter(double[::1] x, double r, double y0):
    cdef Py_ssize_t n = x.shape[0], k
    out = np.empty(n + 1)
    cdef double[::1] y = out
    y[0] = y0
    for k in range(n):
        y[k + 1] = r * y[k] + x[k]
    return out


cdef inline double complex cis(double t) nogil:
    return cos(t) + 1j * sin(t)


cdef void matmul4(double complex[:, ::1] a, double complex[:, ::1] b,
                  double complex[:, ::1] out) nogil:
    cdef int i, j, k
    cdef double complex acc
    for i in range(4):
        for j in range(4):
            acc = 0
            for k in range(4):
                acc = acc + a[i, k] * b[k, j]
            out[i, j] = acc


def fuse_gates(signed char[::1] codes, int[::1] sites, double[::1] angles, int n_sites):
    cdef Py_ssize_t n = codes.shape[0], i, nb = 0
    kinds_a = np.zeros(n + 1, dtype=np.int8)
    bsite_a = np.zeros(n + 1, dtype=np.int32)
    mats_a = np.zeros((n + 1, 4, 4), dtype=complex)
    phase_a = np.zeros(n_sites)
    cdef signed char[::1] kinds = kinds_a
    cdef int[::1] bsite = bsite_a
    cdef double complex[:, :, ::1] mats = mats_a
    cdef double[::1] phase = phase_a
    cdef double complex[:, ::1] pend = np.zeros((4, 4), dtype=complex)
    cdef double complex[:, ::1] tmp = np.zeros((4, 4), dtype=complex)
    cdef double complex[:, ::1] g = np.zeros((4, 4), dtype=complex)
    cdef double complex lo, hi, e
    cdef double a, ha, hb, sq = 1.0 / sqrt(2.0)
    cdef int c, s, psite = -1, j, r
    cdef double complex pre[4]

    for i in range(n):
        c = codes[i]
        s = sites[i]
        a = angles[i]
        if c == RZ:
            if psite >= 0 and (s == psite or s == psite + 1):
                lo = cis(-0.5 * a)
                hi = cis(0.5 * a)
                for r in range(4):
                    # row index r = 2 * left_bit + right_bit
                    if s == psite:
                        e = lo if r < 2 else hi
                    else:
                        e = lo if (r & 1) == 0 else hi
                    for j in range(4):
                        pend[r, j] = pend[r, j] * e
            else:
                phase[s] += a
        elif c == H:
            if psite >= 0 and (s == psite or s == psite + 1):
                for j in range(4):
                    if s == psite:
                        tmp[0, j] = (pend[0, j] + pend[2, j]) * sq
                        tmp[1, j] = (pend[1, j] + pend[3, j]) * sq
                        tmp[2, j] = (pend[0, j] - pend[2, j]) * sq
                        tmp[3, j] = (pend[1, j] - pend[3, j]) * sq
                    else:
                        tmp[0, j] = (pend[0, j] + pend[1, j]) * sq
                        tmp[1, j] = (pend[0, j] - pend[1, j]) * sq
                        tmp[2, j] = (pend[2, j] + pend[3, j]) * sq
                        tmp[3, j] = (pend[2, j] - pend[3, j]) * sq
                pend[:, :] = tmp
            else:
                ha = 0.5 * phase[s]
                phase[s] = 0.0
                lo = cis(-ha) * sq
                hi = cis(ha) * sq
                kinds[nb] = 1
                bsite[nb] = s
                mats[nb, 0, 0] = lo
                mats[nb, 0, 1] = hi
                mats[nb, 1, 0] = lo
                mats[nb, 1, 1] = -hi
                nb += 1
        else:
            g[:, :] = 0
            if c == CRZ:
                g[0, 0] = 1
                g[1, 1] = 1
                g[2, 2] = 1
                g[3, 3] = cis(a)
            else:
                g[0, 0] = 1
                g[1, 2] = 1
                g[2, 1] = 1
                g[3, 3] = 1
            if psite == s:
                matmul4(g, pend, tmp)
                pend[:, :] = tmp
            else:
                if psite >= 0:
                    kinds[nb] = 2
                    bsite[nb] = psite
                    mats[nb, :, :] = pend
                    nb += 1
                ha = 0.5 * phase[s]
                hb = 0.5 * phase[s + 1]
                phase[s] = 0.0
                phase[s + 1] = 0.0
                pre[0] = cis(-(ha + hb))
                pre[1] = cis(-(ha - hb))
                pre[2] = cis(ha - hb)
                pre[3] = cis(ha + hb)
                for r in range(4):
                    for j in range(4):
                        pend[r, j] = g[r, j] * pre[j]
                psite = s
    if psite >= 0:
        kinds[nb] = 2
        bsite[nb] = psite
        mats[nb, :, :] = pend
        nb += 1
    return kinds_a[:nb], bsite_a[:nb], mats_a[:nb], phase_a
