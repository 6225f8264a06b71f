"""Allocation and padding wrapper around the compiled kernels."""

from __future__ import annotations

import numpy as np

from . import _fastkernels as _fk

NAME = "cython"


def _pad(x: np.ndarray, pad: int) -> np.ndarray:
    if not pad:
        return np.ascontiguousarray(x)
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def conv2d_forward(x: np.ndarray, w: np.ndarray, bias: np.ndarray,
                   stride: int, pad: int) -> np.ndarray:
    b, _, h, wd = x.shape
    co, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.empty((b, co, ho, wo), dtype=x.dtype)
    out[:] = bias.reshape(1, co, 1, 1)
    _fk.conv2d_forward_impl(_pad(x, pad), np.ascontiguousarray(w),
                            np.ascontiguousarray(bias), stride, out)
    return out


def conv2d_backward(x: np.ndarray, w: np.ndarray, stride: int, pad: int,
                    gout: np.ndarray):
    b, c, h, wd = x.shape
    gxp = np.zeros((b, c, h + 2 * pad, wd + 2 * pad), dtype=x.dtype)
    gw = np.zeros(w.shape, dtype=w.dtype)
    gb = np.zeros(w.shape[0], dtype=w.dtype)
    _fk.conv2d_backward_impl(_pad(x, pad), np.ascontiguousarray(w), stride,
                             np.ascontiguousarray(gout), gxp, gw, gb)
    gx = gxp[:, :, pad:pad + h, pad:pad + wd] if pad else gxp
    return np.ascontiguousarray(gx), gw, gb


def bilinear_forward(maps: np.ndarray, scene: np.ndarray,
                     fy: np.ndarray, fx: np.ndarray) -> np.ndarray:
    out = np.empty((fy.shape[0], maps.shape[1]), dtype=maps.dtype)
    _fk.bilinear_forward_impl(np.ascontiguousarray(maps), scene, fy, fx, out)
    return out


def bilinear_backward(shape, scene: np.ndarray, fy: np.ndarray, fx: np.ndarray,
                      gout: np.ndarray, dtype) -> np.ndarray:
    gmaps = np.zeros(shape, dtype=dtype)
    _fk.bilinear_backward_impl(gmaps, scene, fy, fx, np.ascontiguousarray(gout))
    return gmaps
