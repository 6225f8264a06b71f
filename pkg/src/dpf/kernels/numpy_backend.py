"""Vectorized numpy implementation of the hot kernels.

conv2d uses im2col plus one BLAS matmul; the col2im accumulation in the
backward pass is expressed as kh*kw strided slice-adds, which avoids
np.add.at on the big buffer.  The bilinear sampler matches the clamping
convention of dpf.geometry.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int, ho: int, wo: int) -> np.ndarray:
    """(B,C,Hp,Wp) padded input -> (B, C*kh*kw, ho*wo) patch matrix."""
    b, c, _, _ = xp.shape
    sb, sc, sh, sw = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp,
        shape=(b, c, kh, kw, ho, wo),
        strides=(sb, sc, sh, sw, sh * stride, sw * stride),
        writeable=False,
    )
    return view.reshape(b, c * kh * kw, ho * wo)


def conv2d_forward(x: np.ndarray, w: np.ndarray, bias: np.ndarray,
                   stride: int, pad: int) -> np.ndarray:
    b, c, h, wdt = x.shape
    co, _, kh, kw = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wdt + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _im2col(xp, kh, kw, stride, ho, wo)
    wmat = w.reshape(co, -1)
    out = np.matmul(wmat[None], cols)  # (B, co, ho*wo)
    out += bias.reshape(1, co, 1)
    return np.ascontiguousarray(out.reshape(b, co, ho, wo))


def conv2d_backward(x: np.ndarray, w: np.ndarray, stride: int, pad: int,
                    gout: np.ndarray):
    b, c, h, wdt = x.shape
    co, _, kh, kw = w.shape
    _, _, ho, wo = gout.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _im2col(xp, kh, kw, stride, ho, wo)
    g2 = gout.reshape(b, co, ho * wo)

    gw = np.matmul(g2, cols.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
    gb = g2.sum(axis=(0, 2))

    wmat = w.reshape(co, -1)
    gcols = np.matmul(wmat.T[None], g2).reshape(b, c, kh, kw, ho, wo)
    gxp = np.zeros_like(xp)
    for ky in range(kh):
        for kx in range(kw):
            gxp[:, :, ky:ky + stride * ho:stride, kx:kx + stride * wo:stride] += gcols[:, :, ky, kx]
    gx = gxp[:, :, pad:pad + h, pad:pad + wdt] if pad else gxp
    return np.ascontiguousarray(gx), gw.astype(w.dtype, copy=False), gb.astype(w.dtype, copy=False)


def _corner_data(shape, fy, fx):
    _, _, h, w = shape
    y0 = np.floor(fy)
    x0 = np.floor(fx)
    ty = fy - y0
    tx = fx - x0
    r0 = np.clip(y0.astype(np.int64), 0, h - 1)
    r1 = np.clip(y0.astype(np.int64) + 1, 0, h - 1)
    c0 = np.clip(x0.astype(np.int64), 0, w - 1)
    c1 = np.clip(x0.astype(np.int64) + 1, 0, w - 1)
    w00 = (1 - ty) * (1 - tx)
    w01 = (1 - ty) * tx
    w10 = ty * (1 - tx)
    w11 = ty * tx
    return (r0, c0, w00), (r0, c1, w01), (r1, c0, w10), (r1, c1, w11)


def bilinear_forward(maps: np.ndarray, scene: np.ndarray,
                     fy: np.ndarray, fx: np.ndarray) -> np.ndarray:
    n = fy.shape[0]
    c = maps.shape[1]
    out = np.zeros((n, c), dtype=maps.dtype)
    for r, col, wgt in _corner_data(maps.shape, fy, fx):
        out += maps[scene, :, r, col] * wgt[:, None].astype(maps.dtype)
    return out


def bilinear_backward(shape, scene: np.ndarray, fy: np.ndarray, fx: np.ndarray,
                      gout: np.ndarray, dtype) -> np.ndarray:
    b, c, h, w = shape
    flat = np.zeros((b * h * w, c), dtype=dtype)
    for r, col, wgt in _corner_data(shape, fy, fx):
        idx = scene * (h * w) + r * w + col
        np.add.at(flat, idx, gout * wgt[:, None].astype(dtype))
    return flat.reshape(b, h, w, c).transpose(0, 3, 1, 2).copy()
