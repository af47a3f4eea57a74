"""Array-level layer kernels for the CNN (NHWC layout).

Every ``*_forward`` returns ``(output, cache)`` and every ``*_backward`` takes
the upstream gradient plus that cache.  Nothing here owns parameters.
"""

from __future__ import annotations

import numpy as np


def _row_patches(x: np.ndarray) -> np.ndarray:
    """Zero-pad (B, H, W, C) and lay it out as flat rows of 3 horizontal taps.

    Row ``r`` of the result holds padded pixels ``r, r+1, r+2`` of the
    flattened (B, H+2, W+2) grid, so a vertical tap ``dy`` is the contiguous
    slice starting at ``dy * (W+2)``.  Output rows that land on padding
    columns are computed and then discarded.
    """
    b, h, w, c = x.shape
    wp = w + 2
    m = b * (h + 2) * wp
    me = m + 2 * wp
    xp = np.zeros((me + 2, c), dtype=x.dtype)
    xp[:m].reshape(b, h + 2, wp, c)[:, 1:-1, 1:-1] = x
    rows = np.empty((me, 3, c), dtype=x.dtype)
    for dx in range(3):
        rows[:, dx] = xp[dx:dx + me]
    return rows.reshape(me, 3 * c)


def conv3x3_forward(x, weight, bias):
    """Stride-1, same-padded 3x3 convolution.

    ``weight`` has shape (3, 3, C_in, C_out); ``bias`` has shape (C_out,).
    """
    b, h, w, c = x.shape
    wp = w + 2
    m = b * (h + 2) * wp
    rows = _row_patches(x)
    wr = weight.reshape(3, 3 * c, -1)
    out = rows[:m] @ wr[0]
    buf = np.empty_like(out)
    for dy in (1, 2):
        np.matmul(rows[dy * wp:dy * wp + m], wr[dy], out=buf)
        out += buf
    out = out.reshape(b, h + 2, wp, -1)[:, :h, :w] + bias
    return out, (rows, x.shape, weight)


def conv3x3_backward(dout, cache, need_input_grad=True):
    rows, (b, h, w, c), weight = cache
    wp = w + 2
    m = b * (h + 2) * wp
    c_out = weight.shape[-1]
    wr = weight.reshape(3, 3 * c, c_out)
    d = np.zeros((m, c_out), dtype=dout.dtype)
    d.reshape(b, h + 2, wp, c_out)[:, :h, :w] = dout
    dweight = np.empty_like(wr)
    for dy in range(3):
        dweight[dy] = rows[dy * wp:dy * wp + m].T @ d
    dbias = dout.sum(axis=(0, 1, 2))
    dx = None
    if need_input_grad:
        drows = np.empty_like(rows)
        np.matmul(d, wr[0].T, out=drows[:m])
        drows[m:] = 0
        buf = np.empty((m, 3 * c), dtype=dout.dtype)
        for dy in (1, 2):
            np.matmul(d, wr[dy].T, out=buf)
            drows[dy * wp:dy * wp + m] += buf
        drows = drows.reshape(-1, 3, c)
        me = drows.shape[0]
        dxp = np.zeros((me + 2, c), dtype=dout.dtype)
        for k in range(3):
            dxp[k:k + me] += drows[:, k]
        dx = dxp[:m].reshape(b, h + 2, wp, c)[:, 1:-1, 1:-1]
    return dx, dweight.reshape(weight.shape), dbias


def relu_forward(x):
    mask = x > 0
    return np.maximum(x, 0, dtype=x.dtype), mask


def relu_backward(dout, mask):
    return dout * mask


_POOL_OFFSETS = ((0, 0), (0, 1), (1, 0), (1, 1))


def maxpool2x2_forward(x):
    """2x2 / stride-2 max pool.

    Ties resolve to the first element of the window in row-major order.
    """
    h, w = x.shape[1:3]
    if h % 2 or w % 2:
        raise ValueError(f"max pool needs even spatial dims, got {h}x{w}")
    views = [x[:, i::2, j::2] for i, j in _POOL_OFFSETS]
    out = np.maximum(np.maximum(views[0], views[1]), np.maximum(views[2], views[3]))
    taken = np.zeros(out.shape, dtype=bool)
    masks = []
    for v in views:
        hit = (v == out) & ~taken
        taken |= hit
        masks.append(hit)
    return out, (masks, x.shape)


def maxpool2x2_backward(dout, cache):
    masks, x_shape = cache
    dx = np.empty(x_shape, dtype=dout.dtype)
    for (i, j), hit in zip(_POOL_OFFSETS, masks):
        np.multiply(dout, hit, out=dx[:, i::2, j::2])
    return dx


def dropout_forward(x, rate, rng, training):
    """Inverted dropout: scales kept units by 1/(1-rate) at train time only."""
    if not training or rate == 0.0:
        return x, None
    keep = 1.0 - rate
    scale = ((rng.random(x.shape) < keep) / keep).astype(x.dtype)
    return x * scale, scale


def dropout_backward(dout, scale):
    if scale is None:
        return dout
    return dout * scale


def dense_forward(x, weight, bias):
    return x @ weight + bias, (x, weight)


def dense_backward(dout, cache, need_input_grad=True):
    x, weight = cache
    dweight = x.T @ dout
    dbias = dout.sum(axis=0)
    dx = dout @ weight.T if need_input_grad else None
    return dx, dweight, dbias


def sigmoid(z):
    # split by sign to avoid overflow in exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z):
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
