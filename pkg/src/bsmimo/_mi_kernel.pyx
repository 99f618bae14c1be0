# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled BPSK mutual-information kernel (see ``_mi_kernel_py`` for the
reference implementation it must agree with)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log2

cnp.import_array()

cdef double[4][2] _X = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]


cdef inline void _sort4(double* v) noexcept nogil:
    cdef double t
    # optimal 5-comparator network
    if v[0] > v[1]:
        t = v[0]; v[0] = v[1]; v[1] = t
    if v[2] > v[3]:
        t = v[2]; v[2] = v[3]; v[3] = t
    if v[0] > v[2]:
        t = v[0]; v[0] = v[2]; v[2] = t
    if v[1] > v[3]:
        t = v[1]; v[1] = v[3]; v[3] = t
    if v[1] > v[2]:
        t = v[1]; v[1] = v[2]; v[2] = t


cdef void _mi_range(const double[:, :, :, ::1] a, const double[:, :, ::1] noise,
                    const cnp.intp_t[::1] block, double inv_nv,
                    Py_ssize_t start, Py_ssize_t stop, double[::1] out) noexcept nogil:
    cdef Py_ssize_t r, k, j, m, n_noise = noise.shape[1]
    cdef double dr[4][4][2]
    cdef double di[4][4][2]
    cdef double dsq[4][4]
    cdef double args[4]
    cdef double mk[4]
    cdef double v0, v1, mx, s, acc, nr0, ni0, nr1, ni1
    cdef Py_ssize_t b
    for r in range(start, stop):
        for k in range(4):
            for j in range(4):
                v0 = _X[k][0] - _X[j][0]
                v1 = _X[k][1] - _X[j][1]
                dr[k][j][0] = a[r, 0, 0, 0] * v0 + a[r, 0, 1, 0] * v1
                di[k][j][0] = a[r, 0, 0, 1] * v0 + a[r, 0, 1, 1] * v1
                dr[k][j][1] = a[r, 1, 0, 0] * v0 + a[r, 1, 1, 0] * v1
                di[k][j][1] = a[r, 1, 0, 1] * v0 + a[r, 1, 1, 1] * v1
                dsq[k][j] = (dr[k][j][0] * dr[k][j][0] + di[k][j][0] * di[k][j][0]
                             + dr[k][j][1] * dr[k][j][1] + di[k][j][1] * di[k][j][1])
        b = block[r]
        for k in range(4):
            acc = 0.0
            for m in range(n_noise):
                nr0 = noise[b, m, 0]
                ni0 = noise[b, m, 1]
                nr1 = noise[b, m, 2]
                ni1 = noise[b, m, 3]
                for j in range(4):
                    # Re(d^H n) = dr.nr + di.ni
                    args[j] = -(dsq[k][j] + 2.0 * (dr[k][j][0] * nr0 + di[k][j][0] * ni0
                                                   + dr[k][j][1] * nr1 + di[k][j][1] * ni1)) * inv_nv
                _sort4(args)
                mx = args[3]
                s = 0.0
                for j in range(4):
                    s += exp(args[j] - mx)
                acc += log2(s) + mx * 1.4426950408889634
            mk[k] = acc / n_noise
        _sort4(mk)
        s = 0.0
        for k in range(4):
            s += mk[k]
        out[r] = 2.0 - 0.25 * s


def mi_realizations(a, noise, block, double noise_var):
    """Per-realization BPSK mutual information (bits).

    Parameters
    ----------
    a : (R, 2, 2) complex
        Effective channel matrices.
    noise : (B, M, 2) complex
        Noise samples with variance ``noise_var`` per complex entry.
    block : (R,) int
        Noise block used by each realization.
    """
    a = np.ascontiguousarray(a, dtype=np.complex128)
    noise = np.ascontiguousarray(noise, dtype=np.complex128)
    cdef const double[:, :, :, ::1] av = a.view(np.float64).reshape(a.shape[0], 2, 2, 2)
    cdef const double[:, :, ::1] nv = noise.view(np.float64).reshape(noise.shape[0], noise.shape[1], 4)
    cdef const cnp.intp_t[::1] bv = np.ascontiguousarray(block, dtype=np.intp)
    cdef Py_ssize_t n = av.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double inv = 1.0 / noise_var
    if n:
        with nogil:
            _mi_range(av, nv, bv, inv, 0, n, ov)
    return out
