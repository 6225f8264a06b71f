# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: direct 2-D convolution and bilinear map sampling.

Same contracts as dpf.kernels.numpy_backend; float32 and float64 via fused
types.  Convolutions take a pre-padded input; inner loops run unit-stride
over rows so the compiler can vectorize them.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

ctypedef fused real:
    float
    double


def conv2d_forward_impl(real[:, :, :, ::1] xp, real[:, :, :, ::1] w,
                        real[::1] bias, int stride, real[:, :, :, ::1] out):
    """xp is the zero-padded input; out holds bias-initialized accumulators."""
    cdef Py_ssize_t B = xp.shape[0], C = xp.shape[1]
    cdef Py_ssize_t CO = w.shape[0], KH = w.shape[2], KW = w.shape[3]
    cdef Py_ssize_t HO = out.shape[2], WO = out.shape[3]
    cdef Py_ssize_t b, co, ci, ky, kx, oy, ox
    cdef real wv
    cdef real * orow
    cdef const real * xrow
    with nogil:
        for b in range(B):
            for co in range(CO):
                for oy in range(HO):
                    orow = &out[b, co, oy, 0]
                    for ci in range(C):
                        for ky in range(KH):
                            xrow = &xp[b, ci, oy * stride + ky, 0]
                            for kx in range(KW):
                                wv = w[co, ci, ky, kx]
                                if stride == 1:
                                    for ox in range(WO):
                                        orow[ox] += wv * xrow[ox + kx]
                                else:
                                    for ox in range(WO):
                                        orow[ox] += wv * xrow[ox * stride + kx]
    return None


def conv2d_backward_impl(real[:, :, :, ::1] xp, real[:, :, :, ::1] w,
                         int stride, real[:, :, :, ::1] gout,
                         real[:, :, :, ::1] gxp, real[:, :, :, ::1] gw,
                         real[::1] gb):
    """Writes input gradients into the padded buffer gxp (caller unpads)."""
    cdef Py_ssize_t B = xp.shape[0], C = xp.shape[1]
    cdef Py_ssize_t CO = w.shape[0], KH = w.shape[2], KW = w.shape[3]
    cdef Py_ssize_t HO = gout.shape[2], WO = gout.shape[3]
    cdef Py_ssize_t b, co, ci, ky, kx, oy, ox
    cdef real wv, acc, gbacc
    cdef const real * grow
    cdef const real * xrow
    cdef real * gxrow
    with nogil:
        for b in range(B):
            for co in range(CO):
                gbacc = 0
                for oy in range(HO):
                    grow = &gout[b, co, oy, 0]
                    for ox in range(WO):
                        gbacc += grow[ox]
                    for ci in range(C):
                        for ky in range(KH):
                            xrow = &xp[b, ci, oy * stride + ky, 0]
                            gxrow = &gxp[b, ci, oy * stride + ky, 0]
                            for kx in range(KW):
                                wv = w[co, ci, ky, kx]
                                acc = 0
                                if stride == 1:
                                    for ox in range(WO):
                                        acc += grow[ox] * xrow[ox + kx]
                                        gxrow[ox + kx] += wv * grow[ox]
                                else:
                                    for ox in range(WO):
                                        acc += grow[ox] * xrow[ox * stride + kx]
                                        gxrow[ox * stride + kx] += wv * grow[ox]
                                gw[co, ci, ky, kx] += acc
                gb[co] += gbacc
    return None


cdef inline void _corners(double f, Py_ssize_t n, Py_ssize_t * i0,
                          Py_ssize_t * i1, double * t) nogil:
    cdef double f0 = floor(f)
    cdef Py_ssize_t a = <Py_ssize_t>f0
    t[0] = f - f0
    i0[0] = a
    i1[0] = a + 1
    if i0[0] < 0: i0[0] = 0
    if i0[0] > n - 1: i0[0] = n - 1
    if i1[0] < 0: i1[0] = 0
    if i1[0] > n - 1: i1[0] = n - 1


def bilinear_forward_impl(real[:, :, :, ::1] maps, long[::1] scene,
                          double[::1] fy, double[::1] fx, real[:, ::1] out):
    cdef Py_ssize_t N = fy.shape[0], C = maps.shape[1]
    cdef Py_ssize_t H = maps.shape[2], W = maps.shape[3]
    cdef Py_ssize_t i, c, r0, r1, c0, c1, s
    cdef double ty, tx, w00, w01, w10, w11
    with nogil:
        for i in range(N):
            s = scene[i]
            _corners(fy[i], H, &r0, &r1, &ty)
            _corners(fx[i], W, &c0, &c1, &tx)
            w00 = (1 - ty) * (1 - tx)
            w01 = (1 - ty) * tx
            w10 = ty * (1 - tx)
            w11 = ty * tx
            for c in range(C):
                out[i, c] = (<real>w00 * maps[s, c, r0, c0]
                             + <real>w01 * maps[s, c, r0, c1]
                             + <real>w10 * maps[s, c, r1, c0]
                             + <real>w11 * maps[s, c, r1, c1])
    return None


def bilinear_backward_impl(real[:, :, :, ::1] gmaps, long[::1] scene,
                           double[::1] fy, double[::1] fx, real[:, ::1] gout):
    cdef Py_ssize_t N = fy.shape[0], C = gmaps.shape[1]
    cdef Py_ssize_t H = gmaps.shape[2], W = gmaps.shape[3]
    cdef Py_ssize_t i, c, r0, r1, c0, c1, s
    cdef double ty, tx, w00, w01, w10, w11
    cdef real g
    with nogil:
        for i in range(N):
            s = scene[i]
            _corners(fy[i], H, &r0, &r1, &ty)
            _corners(fx[i], W, &c0, &c1, &tx)
            w00 = (1 - ty) * (1 - tx)
            w01 = (1 - ty) * tx
            w10 = ty * (1 - tx)
            w11 = ty * tx
            for c in range(C):
                g = gout[i, c]
                gmaps[s, c, r0, c0] += <real>w00 * g
                gmaps[s, c, r0, c1] += <real>w01 * g
                gmaps[s, c, r1, c0] += <real>w10 * g
                gmaps[s, c, r1, c1] += <real>w11 * g
    return None
