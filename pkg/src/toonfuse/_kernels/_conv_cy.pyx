# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of the numpy convolution kernels.

Same contracts as ``_numpy``: float64 CHW maps, OIHW weights, zero padding of
one pixel.  Each kernel pads once and then makes a single unrolled 9-tap pass
per (out, in) channel pair, so the inner loops are branch-free and touch each
pixel once.  Inputs may be read-only arrays; outputs are fresh.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

NAME = "cython"


cdef void _pad_chw(const double[:, :, ::1] src, double[:, :, ::1] dst) noexcept nogil:
    cdef Py_ssize_t c = src.shape[0], h = src.shape[1], w = src.shape[2]
    cdef Py_ssize_t i, p, q
    for i in range(c):
        for p in range(h):
            for q in range(w):
                dst[i, p + 1, q + 1] = src[i, p, q]


def conv3x3(x, w, int stride=1):
    cdef const double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, :, :, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t ci = xv.shape[0], h = xv.shape[1], wd = xv.shape[2]
    cdef Py_ssize_t co = wv.shape[0]
    cdef Py_ssize_t ho, wo
    if stride == 1:
        ho, wo = h, wd
    else:
        ho, wo = (h + 1) // 2, (wd + 1) // 2
    xp_arr = np.zeros((ci, h + 2, wd + 2), dtype=np.float64)
    cdef double[:, :, ::1] xp = xp_arr
    y = np.zeros((co, ho, wo), dtype=np.float64)
    cdef double[:, :, ::1] yv = y
    cdef Py_ssize_t o, i, p, q, sp, sq
    cdef double w00, w01, w02, w10, w11, w12, w20, w21, w22
    cdef const double *r0
    cdef const double *r1
    cdef const double *r2
    cdef double *yrow
    with nogil:
        _pad_chw(xv, xp)
        for o in range(co):
            for i in range(ci):
                w00 = wv[o, i, 0, 0]; w01 = wv[o, i, 0, 1]; w02 = wv[o, i, 0, 2]
                w10 = wv[o, i, 1, 0]; w11 = wv[o, i, 1, 1]; w12 = wv[o, i, 1, 2]
                w20 = wv[o, i, 2, 0]; w21 = wv[o, i, 2, 1]; w22 = wv[o, i, 2, 2]
                for p in range(ho):
                    sp = stride * p
                    r0 = &xp[i, sp, 0]
                    r1 = &xp[i, sp + 1, 0]
                    r2 = &xp[i, sp + 2, 0]
                    yrow = &yv[o, p, 0]
                    for q in range(wo):
                        sq = stride * q
                        yrow[q] += (
                            w00 * r0[sq] + w01 * r0[sq + 1] + w02 * r0[sq + 2]
                            + w10 * r1[sq] + w11 * r1[sq + 1] + w12 * r1[sq + 2]
                            + w20 * r2[sq] + w21 * r2[sq + 1] + w22 * r2[sq + 2]
                        )
    return y


def conv3x3_grad_input(gy, w, Py_ssize_t h, Py_ssize_t wd):
    cdef const double[:, :, ::1] gyv = np.ascontiguousarray(gy, dtype=np.float64)
    cdef const double[:, :, :, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t co = gyv.shape[0], ci = wv.shape[1]
    gp_arr = np.zeros((ci, h + 2, wd + 2), dtype=np.float64)
    cdef double[:, :, ::1] gp = gp_arr
    cdef Py_ssize_t o, i, p, q
    cdef double g
    cdef double w00, w01, w02, w10, w11, w12, w20, w21, w22
    cdef double *r0
    cdef double *r1
    cdef double *r2
    cdef const double *grow
    with nogil:
        for i in range(ci):
            for o in range(co):
                w00 = wv[o, i, 0, 0]; w01 = wv[o, i, 0, 1]; w02 = wv[o, i, 0, 2]
                w10 = wv[o, i, 1, 0]; w11 = wv[o, i, 1, 1]; w12 = wv[o, i, 1, 2]
                w20 = wv[o, i, 2, 0]; w21 = wv[o, i, 2, 1]; w22 = wv[o, i, 2, 2]
                for p in range(h):
                    r0 = &gp[i, p, 0]
                    r1 = &gp[i, p + 1, 0]
                    r2 = &gp[i, p + 2, 0]
                    grow = &gyv[o, p, 0]
                    for q in range(wd):
                        g = grow[q]
                        r0[q] += w00 * g; r0[q + 1] += w01 * g; r0[q + 2] += w02 * g
                        r1[q] += w10 * g; r1[q + 1] += w11 * g; r1[q + 2] += w12 * g
                        r2[q] += w20 * g; r2[q + 1] += w21 * g; r2[q + 2] += w22 * g
    return gp_arr[:, 1 : h + 1, 1 : wd + 1].copy()


def conv3x3_grad_weight(gy, x):
    cdef const double[:, :, ::1] gyv = np.ascontiguousarray(gy, dtype=np.float64)
    cdef const double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t ci = xv.shape[0], h = xv.shape[1], wd = xv.shape[2]
    cdef Py_ssize_t co = gyv.shape[0]
    xp_arr = np.zeros((ci, h + 2, wd + 2), dtype=np.float64)
    cdef double[:, :, ::1] xp = xp_arr
    gw = np.zeros((co, ci, 3, 3), dtype=np.float64)
    cdef double[:, :, :, ::1] gwv = gw
    cdef Py_ssize_t o, i, p, q
    cdef double g
    cdef double a00, a01, a02, a10, a11, a12, a20, a21, a22
    cdef const double *r0
    cdef const double *r1
    cdef const double *r2
    cdef const double *grow
    with nogil:
        _pad_chw(xv, xp)
        for o in range(co):
            for i in range(ci):
                a00 = a01 = a02 = a10 = a11 = a12 = a20 = a21 = a22 = 0.0
                for p in range(h):
                    r0 = &xp[i, p, 0]
                    r1 = &xp[i, p + 1, 0]
                    r2 = &xp[i, p + 2, 0]
                    grow = &gyv[o, p, 0]
                    for q in range(wd):
                        g = grow[q]
                        a00 += g * r0[q]; a01 += g * r0[q + 1]; a02 += g * r0[q + 2]
                        a10 += g * r1[q]; a11 += g * r1[q + 1]; a12 += g * r1[q + 2]
                        a20 += g * r2[q]; a21 += g * r2[q + 1]; a22 += g * r2[q + 2]
                gwv[o, i, 0, 0] = a00; gwv[o, i, 0, 1] = a01; gwv[o, i, 0, 2] = a02
                gwv[o, i, 1, 0] = a10; gwv[o, i, 1, 1] = a11; gwv[o, i, 1, 2] = a12
                gwv[o, i, 2, 0] = a20; gwv[o, i, 2, 1] = a21; gwv[o, i, 2, 2] = a22
    return gw
