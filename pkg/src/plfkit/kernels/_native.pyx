# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: alignment DP and valid 2D convolution.

Contracts mirror plfkit.kernels.reference exactly; results may differ from
the NumPy versions only by floating-point summation order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def edit_counts(object ref_seq, object hyp_seq):
    cdef cnp.int32_t[::1] ref = np.ascontiguousarray(ref_seq, dtype=np.int32)
    cdef cnp.int32_t[::1] hyp = np.ascontiguousarray(hyp_seq, dtype=np.int32)
    cdef Py_ssize_t n = ref.shape[0]
    cdef Py_ssize_t m = hyp.shape[0]
    d_arr = np.zeros((n + 1, m + 1), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] d = d_arr
    cdef Py_ssize_t i, j
    cdef cnp.int32_t diag, up, left, best
    for i in range(n + 1):
        d[i, 0] = <cnp.int32_t> i
    for j in range(m + 1):
        d[0, j] = <cnp.int32_t> j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            diag = d[i - 1, j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1)
            up = d[i - 1, j] + 1
            left = d[i, j - 1] + 1
            best = diag
            if up < best:
                best = up
            if left < best:
                best = left
            d[i, j] = best
    cdef long n_ins = 0, n_del = 0, n_sub = 0
    i = n
    j = m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i, j] == d[i - 1, j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1):
            if ref[i - 1] != hyp[j - 1]:
                n_sub += 1
            i -= 1
            j -= 1
        elif i > 0 and d[i, j] == d[i - 1, j] + 1:
            n_del += 1
            i -= 1
        else:
            n_ins += 1
            j -= 1
    return n_ins, n_del, n_sub


def conv2d_forward(object x_in, object w_in, object b_in, Py_ssize_t sh, Py_ssize_t sw):
    cdef double[:, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[:, :, :, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t cin = x.shape[0], h = x.shape[1], wd = x.shape[2]
    cdef Py_ssize_t cout = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ho = (h - kh) // sh + 1
    cdef Py_ssize_t wo = (wd - kw) // sw + 1
    out_arr = np.empty((cout, ho, wo), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t co, ci, i, j, u, v
    cdef double acc
    for co in range(cout):
        for i in range(ho):
            for j in range(wo):
                acc = b[co]
                for ci in range(cin):
                    for u in range(kh):
                        for v in range(kw):
                            acc += x[ci, i * sh + u, j * sw + v] * w[co, ci, u, v]
                out[co, i, j] = acc
    return out_arr


def conv2d_backward(object x_in, object w_in, Py_ssize_t sh, Py_ssize_t sw, object dout_in):
    cdef double[:, :, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[:, :, :, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef double[:, :, ::1] dout = np.ascontiguousarray(dout_in, dtype=np.float64)
    cdef Py_ssize_t cin = x.shape[0]
    cdef Py_ssize_t cout = w.shape[0], kh = w.shape[2], kw = w.shape[3]
    cdef Py_ssize_t ho = dout.shape[1], wo = dout.shape[2]
    dx_arr = np.zeros((x.shape[0], x.shape[1], x.shape[2]), dtype=np.float64)
    dw_arr = np.zeros((cout, cin, kh, kw), dtype=np.float64)
    db_arr = np.zeros(cout, dtype=np.float64)
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, :, :, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t co, ci, i, j, u, v
    cdef double g
    for co in range(cout):
        for i in range(ho):
            for j in range(wo):
                g = dout[co, i, j]
                db[co] += g
                for ci in range(cin):
                    for u in range(kh):
                        for v in range(kw):
                            dx[ci, i * sh + u, j * sw + v] += g * w[co, ci, u, v]
                            dw[co, ci, u, v] += g * x[ci, i * sh + u, j * sw + v]
    return dx_arr, dw_arr, db_arr
