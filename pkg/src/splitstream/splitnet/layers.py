"""Batched forward/backward primitives for the toy CNN engine.

Activations are (batch, rows, cols, channels) arrays until flattened.
Every backward function consumes the cache its forward returned and yields
(dx, dw, db); parameter-free layers yield None gradients.  Summation
orders are fixed so repeated runs are bit-identical.
"""

from __future__ import annotations

import numpy as np


def conv_output_shape(n: int, m: int, kernel: int, stride: int, same_pad: bool):
    if same_pad:
        return -(-n // stride), -(-m // stride)
    return (n - kernel) // stride + 1, (m - kernel) // stride + 1


def _pad_amounts(size: int, kernel: int, stride: int) -> tuple[int, int]:
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return total // 2, total - total // 2


def conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int,
                 same_pad: bool):
    kernel = w.shape[0]
    cin, cout = w.shape[2], w.shape[3]
    if x.shape[3] != cin:
        raise ValueError(f"input has {x.shape[3]} channels, kernel expects {cin}")
    if same_pad:
        pt, pb = _pad_amounts(x.shape[1], kernel, stride)
        pl, pr = _pad_amounts(x.shape[2], kernel, stride)
        xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    else:
        pt = pl = 0
        xp = x
    batch, hp, wp, _ = xp.shape
    hout = (hp - kernel) // stride + 1
    wout = (wp - kernel) // stride + 1
    s = xp.strides
    patches = np.lib.stride_tricks.as_strided(
        xp,
        shape=(batch, hout, wout, kernel, kernel, cin),
        strides=(s[0], s[1] * stride, s[2] * stride, s[1], s[2], s[3]),
    )
    cols = patches.reshape(batch * hout * wout, kernel * kernel * cin)
    out = cols @ w.reshape(kernel * kernel * cin, cout) + b
    cache = (cols, xp.shape, (pt, pl), x.shape, w, stride)
    return out.reshape(batch, hout, wout, cout), cache


def conv_backward(dout: np.ndarray, cache):
    cols, xp_shape, (pt, pl), x_shape, w, stride = cache
    kernel, _, cin, cout = w.shape
    batch, hout, wout, _ = dout.shape
    dflat = dout.reshape(batch * hout * wout, cout)
    dw = (cols.T @ dflat).reshape(w.shape)
    db = dflat.sum(axis=0)
    dcols = dflat @ w.reshape(kernel * kernel * cin, cout).T
    dpatch = dcols.reshape(batch, hout, wout, kernel, kernel, cin)
    dxp = np.zeros(xp_shape, dtype=dout.dtype)
    for i in range(kernel):
        for j in range(kernel):
            dxp[:, i:i + hout * stride:stride, j:j + wout * stride:stride, :] += \
                dpatch[:, :, :, i, j, :]
    dx = dxp[:, pt:pt + x_shape[1], pl:pl + x_shape[2], :]
    return dx, dw, db


def maxpool_forward(x: np.ndarray):
    """2x2 max pooling with stride 2; trailing odd rows/cols are dropped."""
    batch, n, m, c = x.shape
    n2, m2 = n - n % 2, m - m % 2
    windows = x[:, :n2, :m2, :].reshape(batch, n2 // 2, 2, m2 // 2, 2, c)
    flat = windows.transpose(0, 1, 3, 5, 2, 4).reshape(batch, n2 // 2, m2 // 2, c, 4)
    # argmax takes the first maximum, fixing gradient routing on ties
    idx = flat.argmax(axis=4)
    out = np.take_along_axis(flat, idx[..., None], axis=4)[..., 0]
    return out, (x.shape, idx)


def maxpool_backward(dout: np.ndarray, cache):
    x_shape, idx = cache
    batch, n, m, c = x_shape
    n2, m2 = n - n % 2, m - m % 2
    dwin = np.zeros((batch, n2 // 2, m2 // 2, c, 4), dtype=dout.dtype)
    np.put_along_axis(dwin, idx[..., None], dout[..., None], axis=4)
    dx = np.zeros(x_shape, dtype=dout.dtype)
    dx[:, :n2, :m2, :] = (
        dwin.reshape(batch, n2 // 2, m2 // 2, c, 2, 2)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(batch, n2, m2, c)
    )
    return dx, None, None


def leaky_relu_forward(x: np.ndarray, slope: float):
    out = np.where(x > 0, x, slope * x)
    return out, (x > 0, slope)


def leaky_relu_backward(dout: np.ndarray, cache):
    positive, slope = cache
    return np.where(positive, dout, slope * dout), None, None


def flatten_forward(x: np.ndarray):
    return x.reshape(x.shape[0], -1), (x.shape,)


def flatten_backward(dout: np.ndarray, cache):
    (x_shape,) = cache
    return dout.reshape(x_shape), None, None


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    if x.ndim != 2:
        raise ValueError(f"dense expects flattened input, got {x.ndim}-d")
    if x.shape[1] != w.shape[0]:
        raise ValueError(f"dense input width {x.shape[1]} != {w.shape[0]}")
    return x @ w + b, (x, w)


def dense_backward(dout: np.ndarray, cache):
    x, w = cache
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def softmax_forward(x: np.ndarray):
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)
    return out, (out,)


def softmax_backward(dout: np.ndarray, cache):
    (out,) = cache
    inner = (dout * out).sum(axis=-1, keepdims=True)
    return out * (dout - inner), None, None


def cross_entropy(probs: np.ndarray, labels: np.ndarray):
    """Mean negative log-likelihood and its gradient w.r.t. the probabilities."""
    batch = probs.shape[0]
    picked = np.maximum(probs[np.arange(batch), labels], 1e-300)
    loss = float(-np.log(picked).mean())
    dprobs = np.zeros_like(probs)
    dprobs[np.arange(batch), labels] = -1.0 / (batch * picked)
    return loss, dprobs
