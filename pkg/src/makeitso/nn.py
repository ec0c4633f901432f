"""Differentiable array primitives used by the generator and feature extractor.

Every op comes as a ``*_fwd`` / ``*_bwd`` pair: the forward returns the output
plus an opaque cache, the backward consumes the cache and the upstream gradient
and returns gradients for each input. All ops are pure and follow the dtype of
their inputs, so the same code path runs in float32 (run mode) and float64
(gradient-check mode). Images and feature maps are channel-first ``(C, H, W)``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

DEMOD_EPS = 1e-8
NORM_EPS = 1e-12


# ---------------------------------------------------------------------------
# dense / pointwise


def linear_fwd(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    y = w @ x + b
    return y, (x, w)


def linear_bwd(cache, dy: np.ndarray):
    x, w = cache
    dx = w.T @ dy
    dw = np.outer(dy, x)
    db = dy.copy()
    return dx, dw, db


def lrelu_fwd(x: np.ndarray, slope: float):
    y = np.where(x >= 0, x, slope * x)
    return y, (x >= 0, slope)


def lrelu_bwd(cache, dy: np.ndarray):
    pos, slope = cache
    return np.where(pos, dy, slope * dy)


def tanh_fwd(x: np.ndarray):
    y = np.tanh(x)
    return y, y


def tanh_bwd(cache, dy: np.ndarray):
    y = cache
    return dy * (1.0 - y * y)


def upsample2x_fwd(x: np.ndarray):
    # nearest-neighbour; adjoint is a 2x2 sum pool
    y = np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)
    return y, x.shape


def upsample2x_bwd(cache, dy: np.ndarray):
    c, h, w = cache
    return dy.reshape(c, h, 2, w, 2).sum(axis=(2, 4))


# ---------------------------------------------------------------------------
# convolution (im2col + GEMM)


def _im2col(x: np.ndarray, k: int, stride: int, pad: int):
    c = x.shape[0]
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad))) if pad else x
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    ho, wo = win.shape[1], win.shape[2]
    cols = np.ascontiguousarray(win.transpose(0, 3, 4, 1, 2)).reshape(c * k * k, ho * wo)
    return cols, ho, wo


def conv2d_fwd(x: np.ndarray, w: np.ndarray, stride: int = 1, pad: int = 1):
    co, ci, k, _ = w.shape
    cols, ho, wo = _im2col(x, k, stride, pad)
    y = (w.reshape(co, -1) @ cols).reshape(co, ho, wo)
    return y, (cols, x.shape, w, stride, pad)


def conv2d_bwd(cache, dy: np.ndarray):
    cols, x_shape, w, stride, pad = cache
    co, ci, k, _ = w.shape
    c, h, wid = x_shape
    ho, wo = dy.shape[1], dy.shape[2]
    dyf = dy.reshape(co, -1)
    dw = (dyf @ cols.T).reshape(w.shape)
    dcols = (w.reshape(co, -1).T @ dyf).reshape(ci, k, k, ho, wo)
    dxp = np.zeros((c, h + 2 * pad, wid + 2 * pad), dtype=dy.dtype)
    for a in range(k):
        for b in range(k):
            dxp[:, a:a + stride * ho:stride, b:b + stride * wo:stride] += dcols[:, a, b]
    dx = dxp[:, pad:pad + h, pad:pad + wid] if pad else dxp
    return dx, dw


# ---------------------------------------------------------------------------
# style-modulated convolution (per-input-channel scale + weight demodulation)


def modconv2d_fwd(x, style, weight, bias, affine_w, affine_b, demodulate: bool = True, pad: int = 1):
    """Convolution whose kernel is scaled per input channel by an affine of ``style``.

    ``weight`` is ``(C_out, C_in, k, k)``; the style vector is mapped to scales
    ``s = affine_w @ style + affine_b`` applied along C_in. With ``demodulate``
    each output filter is rescaled to unit L2 norm (plus epsilon), as in
    style-based generators.
    """
    s = affine_w @ style + affine_b
    w1 = weight * s[None, :, None, None]
    if demodulate:
        sq = np.sum(w1 * w1, axis=(1, 2, 3)) + DEMOD_EPS
        d = 1.0 / np.sqrt(sq)
        w2 = w1 * d[:, None, None, None]
    else:
        d = None
        w2 = w1
    y, conv_cache = conv2d_fwd(x, w2, stride=1, pad=pad)
    y = y + bias[:, None, None]
    return y, (conv_cache, style, s, weight, w1, d, affine_w, demodulate)


def modconv2d_bwd(cache, dy: np.ndarray):
    conv_cache, style, s, weight, w1, d, affine_w, demodulate = cache
    dbias = dy.sum(axis=(1, 2))
    dx, dw2 = conv2d_bwd(conv_cache, dy)
    if demodulate:
        # w2 = w1 * d with d = (sum w1^2 + eps)^(-1/2)
        dd = np.sum(dw2 * w1, axis=(1, 2, 3))
        dsq = dd * (-0.5) * d * d * d
        dw1 = dw2 * d[:, None, None, None] + 2.0 * w1 * dsq[:, None, None, None]
    else:
        dw1 = dw2
    dweight = dw1 * s[None, :, None, None]
    ds = np.sum(dw1 * weight, axis=(0, 2, 3))
    daffine_w = np.outer(ds, style)
    daffine_b = ds
    dstyle = affine_w.T @ ds
    return dx, dstyle, dweight, dbias, daffine_w, daffine_b


# ---------------------------------------------------------------------------
# channel-wise unit normalization (used by the perceptual distance)


def channel_normalize_fwd(f: np.ndarray):
    """Normalize each spatial position's channel vector to unit length.

    Uses ``n = sqrt(sum_c f^2 + eps)`` so the op stays differentiable at the
    all-zero feature vector.
    """
    n = np.sqrt(np.sum(f * f, axis=0, keepdims=True) + NORM_EPS)
    y = f / n
    return y, (f, n, y)


def channel_normalize_bwd(cache, dy: np.ndarray):
    f, n, y = cache
    dot = np.sum(dy * f, axis=0, keepdims=True)
    return dy / n - f * (dot / (n * n * n))
