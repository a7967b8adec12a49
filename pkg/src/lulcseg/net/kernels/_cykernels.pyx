# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend.

Same padded-domain contract as pykernels. Parallel loops are arranged so
each output element is written by exactly one thread with a fixed
accumulation order, making results bit-stable for any thread count.
"""

import numpy as np

cimport cython
from cython.parallel cimport prange

ctypedef fused floating:
    float
    double

NAME = "cython"

cdef int _num_threads = 1


def set_num_threads(n: int):
    global _num_threads
    _num_threads = max(1, int(n))


def _threads():
    return _num_threads


cdef void _conv_fwd_loop(floating[:, :, :, ::1] xp, floating[:, :, :, ::1] w,
                         floating[::1] b, int stride,
                         floating[:, :, :, ::1] y, int nt) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0], co = y.shape[1], oh = y.shape[2], ow = y.shape[3]
    cdef Py_ssize_t ci = w.shape[1], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t t, nn, cc, c_in, i, j, r, q, ih
    cdef floating wv, bv
    for t in prange(n * co, num_threads=nt, schedule='static'):
        nn = t // co
        cc = t % co
        bv = b[cc]
        for r in range(oh):
            for q in range(ow):
                y[nn, cc, r, q] = bv
        for c_in in range(ci):
            for i in range(kh):
                for j in range(kw):
                    wv = w[cc, c_in, i, j]
                    for r in range(oh):
                        ih = r * stride + i
                        for q in range(ow):
                            y[nn, cc, r, q] += xp[nn, c_in, ih, q * stride + j] * wv


cdef void _conv_gx_loop(floating[:, :, :, ::1] gy, floating[:, :, :, ::1] w,
                        int stride, floating[:, :, :, ::1] gxp, int nt) noexcept nogil:
    cdef Py_ssize_t n = gy.shape[0], co = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    cdef Py_ssize_t ci = w.shape[1], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t t, nn, c_in, cc, i, j, r, q, ih
    cdef floating wv
    for t in prange(n * ci, num_threads=nt, schedule='static'):
        nn = t // ci
        c_in = t % ci
        for cc in range(co):
            for i in range(kh):
                for j in range(kw):
                    wv = w[cc, c_in, i, j]
                    for r in range(oh):
                        ih = r * stride + i
                        for q in range(ow):
                            gxp[nn, c_in, ih, q * stride + j] += gy[nn, cc, r, q] * wv


cdef void _conv_gw_loop(floating[:, :, :, ::1] xp, floating[:, :, :, ::1] gy,
                        int stride, floating[:, :, :, ::1] gw, int nt) noexcept nogil:
    cdef Py_ssize_t n = gy.shape[0], co = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    cdef Py_ssize_t ci = xp.shape[1], kh = gw.shape[2], kw = gw.shape[3]
    cdef Py_ssize_t t, nn, cc, c_in, i, j, r, q, ih
    cdef floating acc
    for t in prange(co * ci, num_threads=nt, schedule='static'):
        cc = t // ci
        c_in = t % ci
        for i in range(kh):
            for j in range(kw):
                acc = 0
                for nn in range(n):
                    for r in range(oh):
                        ih = r * stride + i
                        for q in range(ow):
                            acc = acc + gy[nn, cc, r, q] * xp[nn, c_in, ih, q * stride + j]
                gw[cc, c_in, i, j] = acc


cdef void _pool_fwd_loop(floating[:, :, :, ::1] x, floating[:, :, :, ::1] y,
                         unsigned char[:, :, :, ::1] idx, int nt) noexcept nogil:
    cdef Py_ssize_t n = y.shape[0], c = y.shape[1], oh = y.shape[2], ow = y.shape[3]
    cdef Py_ssize_t t, nn, cc, r, q, bh, bw
    cdef floating v
    cdef unsigned char code
    for t in prange(n * c, num_threads=nt, schedule='static'):
        nn = t // c
        cc = t % c
        for r in range(oh):
            bh = 2 * r
            for q in range(ow):
                bw = 2 * q
                v = x[nn, cc, bh, bw]
                code = 0
                if x[nn, cc, bh, bw + 1] > v:
                    v = x[nn, cc, bh, bw + 1]
                    code = 1
                if x[nn, cc, bh + 1, bw] > v:
                    v = x[nn, cc, bh + 1, bw]
                    code = 2
                if x[nn, cc, bh + 1, bw + 1] > v:
                    v = x[nn, cc, bh + 1, bw + 1]
                    code = 3
                y[nn, cc, r, q] = v
                idx[nn, cc, r, q] = code


cdef void _pool_bwd_loop(unsigned char[:, :, :, ::1] idx, floating[:, :, :, ::1] gy,
                         floating[:, :, :, ::1] gx, int nt) noexcept nogil:
    cdef Py_ssize_t n = gy.shape[0], c = gy.shape[1], oh = gy.shape[2], ow = gy.shape[3]
    cdef Py_ssize_t t, nn, cc, r, q
    cdef unsigned char code
    for t in prange(n * c, num_threads=nt, schedule='static'):
        nn = t // c
        cc = t % c
        for r in range(oh):
            for q in range(ow):
                code = idx[nn, cc, r, q]
                gx[nn, cc, 2 * r + (code >> 1), 2 * q + (code & 1)] = gy[nn, cc, r, q]


def conv_fwd_padded(xp, w, b, stride: int):
    n, ci, hp, wp = xp.shape
    co, _, kh, kw = w.shape
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    y = np.empty((n, co, oh, ow), dtype=xp.dtype)
    if xp.dtype == np.float32:
        _conv_fwd_loop[float](xp, w, b, stride, y, _num_threads)
    else:
        _conv_fwd_loop[double](xp, w, b, stride, y, _num_threads)
    return y


def conv_gx_padded(gy, w, stride: int, hp: int, wp: int):
    n, co, oh, ow = gy.shape
    ci = w.shape[1]
    gxp = np.zeros((n, ci, hp, wp), dtype=gy.dtype)
    if gy.dtype == np.float32:
        _conv_gx_loop[float](gy, w, stride, gxp, _num_threads)
    else:
        _conv_gx_loop[double](gy, w, stride, gxp, _num_threads)
    return gxp


def conv_gw_padded(xp, gy, stride: int, kh: int, kw: int):
    co = gy.shape[1]
    ci = xp.shape[1]
    gw = np.empty((co, ci, kh, kw), dtype=gy.dtype)
    if gy.dtype == np.float32:
        _conv_gw_loop[float](xp, gy, stride, gw, _num_threads)
    else:
        _conv_gw_loop[double](xp, gy, stride, gw, _num_threads)
    return gw


def maxpool2_fwd(x):
    n, c, h, w = x.shape
    y = np.empty((n, c, h // 2, w // 2), dtype=x.dtype)
    idx = np.empty((n, c, h // 2, w // 2), dtype=np.uint8)
    if x.dtype == np.float32:
        _pool_fwd_loop[float](x, y, idx, _num_threads)
    else:
        _pool_fwd_loop[double](x, y, idx, _num_threads)
    return y, idx


def maxpool2_bwd(idx, gy, h: int, w: int):
    n, c = gy.shape[0], gy.shape[1]
    gx = np.zeros((n, c, h, w), dtype=gy.dtype)
    if gy.dtype == np.float32:
        _pool_bwd_loop[float](idx, gy, gx, _num_threads)
    else:
        _pool_bwd_loop[double](idx, gy, gx, _num_threads)
    return gx
