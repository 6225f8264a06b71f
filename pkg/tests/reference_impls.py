"""Independent straight-line reference implementations used as test oracles.

Deliberately naive: explicit loops over output pixels in float64.  These
never share code with the package's kernels.
"""

import numpy as np


def conv2d_ref(x, w, b, stride=1, pad=1):
    """Direct convolution, one output pixel at a time."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    bs, c, h, wd = x.shape
    co, _, kh, kw = w.shape
    xp = np.zeros((bs, c, h + 2 * pad, wd + 2 * pad))
    xp[:, :, pad:pad + h, pad:pad + wd] = x
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((bs, co, ho, wo))
    for bi in range(bs):
        for o in range(co):
            for oy in range(ho):
                for ox in range(wo):
                    patch = xp[bi, :, oy * stride:oy * stride + kh,
                               ox * stride:ox * stride + kw]
                    out[bi, o, oy, ox] = np.sum(patch * w[o]) + b[o]
    return out


def backbone_ref(image, params, widths, strides, task):
    """Reference forward pass of the backbone stand-in."""
    h = np.asarray(image, dtype=np.float64)
    for i, stride in enumerate(strides):
        h = conv2d_ref(h, params[f"backbone.conv{i}.w"].data,
                       params[f"backbone.conv{i}.b"].data, stride=stride, pad=1)
        h = np.maximum(h, 0.0)
    feats = h
    base = conv2d_ref(feats, params["backbone.head.w"].data,
                      params["backbone.head.b"].data, stride=1, pad=0)
    if task == "intrinsic":
        base = 1e-3 + (1.0 - 1e-3) / (1.0 + np.exp(-base))
    return base, feats


def guidance_ref(guide, params, blocks):
    h = conv2d_ref(np.asarray(guide, dtype=np.float64),
                   params["guide.stem.w"].data, params["guide.stem.b"].data)
    for i in range(blocks):
        br = conv2d_ref(h, params[f"guide.block{i}.conv0.w"].data,
                        params[f"guide.block{i}.conv0.b"].data)
        br = np.maximum(br, 0.0)
        br = conv2d_ref(br, params[f"guide.block{i}.conv1.w"].data,
                        params[f"guide.block{i}.conv1.b"].data)
        h = h + br
    return h


def bilinear_upsample_ref(v, out_h, out_w):
    """Classical bilinear resize with border clamping, pixel-center aligned."""
    v = np.asarray(v, dtype=np.float64)
    c, h, w = v.shape
    out = np.zeros((c, out_h, out_w))
    for oy in range(out_h):
        sy = (oy + 0.5) * h / out_h - 0.5
        y0 = int(np.floor(sy))
        ty = sy - y0
        r0 = min(max(y0, 0), h - 1)
        r1 = min(max(y0 + 1, 0), h - 1)
        for ox in range(out_w):
            sx = (ox + 0.5) * w / out_w - 0.5
            x0 = int(np.floor(sx))
            tx = sx - x0
            c0 = min(max(x0, 0), w - 1)
            c1 = min(max(x0 + 1, 0), w - 1)
            out[:, oy, ox] = ((1 - ty) * (1 - tx) * v[:, r0, c0]
                              + (1 - ty) * tx * v[:, r0, c1]
                              + ty * (1 - tx) * v[:, r1, c0]
                              + ty * tx * v[:, r1, c1])
    return out


def whdr_ref(labels, weights, r1, r2, delta=0.1):
    """Straight-line WHDR: classify each pair, accumulate weighted errors."""
    err = 0.0
    tot = 0.0
    for lab, wgt, a, b in zip(labels, weights, r1, r2):
        if b / a > 1.0 + delta:
            pred = 1
        elif a / b > 1.0 + delta:
            pred = 2
        else:
            pred = 0
        if pred != lab:
            err += wgt
        tot += wgt
    return err / tot


def hinge_ref(r1, r2, label, delta=0.12, eps=0.08):
    """Straight-line hinge loss, one branch per judgment."""
    ratio = r1 / r2
    if label == 1:
        return max(0.0, ratio - 1.0 / (1.0 + delta + eps))
    if label == 2:
        return max(0.0, 1.0 + delta + eps - ratio)
    return max(0.0, max(1.0 / (1.0 + delta - eps) - ratio, ratio - (1.0 + delta - eps)))
