"""Layer primitives with hand-derived backward passes.

Each ``*_forward`` returns ``(output, cache)`` and the matching
``*_backward`` maps an output gradient plus cache to input/parameter
gradients. Convolutions run channels-last internally (im2col over
3x3 windows, chunked so the column buffer stays cache-sized); the
channels-first ``conv2d`` / ``maxpool2d`` wrappers follow the
(C, H, W) convention used by frames.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeError
from ._kernels import maxpool_backward, maxpool_forward

CONV_CHUNK = 16


def _pad_hw(x: np.ndarray) -> np.ndarray:
    return np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))


def _cols(xp: np.ndarray) -> np.ndarray:
    """Padded (n, H+2, W+2, C) -> (n*H*W, 9*C) with column order (kh, kw, c)."""
    n, hp, wp, c = xp.shape
    win = sliding_window_view(xp, (3, 3), axis=(1, 2)).transpose(0, 1, 2, 4, 5, 3)
    return win.reshape(n * (hp - 2) * (wp - 2), 9 * c)


def _conv_nhwc(xp: np.ndarray, wmat: np.ndarray, out: np.ndarray) -> None:
    n, h, w, co = out.shape
    for s in range(0, n, CONV_CHUNK):
        e = min(n, s + CONV_CHUNK)
        np.matmul(_cols(xp[s:e]), wmat, out=out[s:e].reshape((e - s) * h * w, co))


def conv2d_nhwc_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """3x3 convolution, stride 1, zero padding 1. x: (N, H, W, C_in); w: (C_out, C_in, 3, 3)."""
    if x.ndim != 4 or w.ndim != 4 or w.shape[2:] != (3, 3):
        raise ShapeError(f"conv2d expects (N,H,W,C) input and (Co,Ci,3,3) kernels, got {x.shape}, {w.shape}")
    if x.shape[3] != w.shape[1]:
        raise ShapeError(f"conv2d channel mismatch: input has {x.shape[3]}, kernels expect {w.shape[1]}")
    n, h, wd, _ = x.shape
    co = w.shape[0]
    xp = _pad_hw(x)
    wmat = np.ascontiguousarray(w.transpose(2, 3, 1, 0).reshape(-1, co), dtype=x.dtype)
    y = np.empty((n, h, wd, co), dtype=np.result_type(x, w))
    _conv_nhwc(xp, wmat, y)
    y += b.astype(y.dtype, copy=False)
    return y, xp


def conv2d_nhwc_backward(dy: np.ndarray, xp: np.ndarray, w: np.ndarray, need_dx: bool = True):
    n, h, wd, co = dy.shape
    ci = w.shape[1]
    dy = np.ascontiguousarray(dy)
    dwmat = np.zeros((9 * ci, co), dtype=dy.dtype)
    for s in range(0, n, CONV_CHUNK):
        e = min(n, s + CONV_CHUNK)
        dwmat += _cols(xp[s:e]).T @ dy[s:e].reshape(-1, co)
    dw = dwmat.reshape(3, 3, ci, co).transpose(3, 2, 0, 1)
    db = dy.sum(axis=(0, 1, 2))
    dx = None
    if need_dx:
        # correlation of the padded output gradient with spatially flipped, channel-swapped kernels
        wflip = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(2, 3, 0, 1).reshape(-1, ci), dtype=dy.dtype)
        dx = np.empty((n, h, wd, ci), dtype=dy.dtype)
        _conv_nhwc(_pad_hw(dy), wflip, dx)
    return dx, np.ascontiguousarray(dw), db


def conv_transpose_nhwc(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Apply the transposed 3x3 filter bank: (N, H, W, C_out) -> (N, H, W, C_in)."""
    ci = w.shape[1]
    wflip = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(2, 3, 0, 1).reshape(-1, ci), dtype=y.dtype)
    dx = np.empty(y.shape[:3] + (ci,), dtype=y.dtype)
    _conv_nhwc(_pad_hw(np.ascontiguousarray(y)), wflip, dx)
    return dx


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Channels-first wrapper: x (N, C_in, H, W) or (C_in, H, W)."""
    single = x.ndim == 3
    xb = x[None] if single else x
    if xb.ndim != 4:
        raise ShapeError(f"conv2d expects (N,C,H,W), got {x.shape}")
    y, cache = conv2d_nhwc_forward(np.ascontiguousarray(xb.transpose(0, 2, 3, 1)), w, b)
    y = y.transpose(0, 3, 1, 2)
    return (y[0] if single else y), (cache, single)


def conv2d_backward(dy: np.ndarray, cache, w: np.ndarray):
    xp, single = cache
    dyb = dy[None] if single else dy
    dx, dw, db = conv2d_nhwc_backward(dyb.transpose(0, 2, 3, 1), xp, w)
    dx = dx.transpose(0, 3, 1, 2)
    return (dx[0] if single else dx), dw, db


def conv2d(x, w, b):
    return conv2d_forward(x, w, b)[0]


def relu_forward(x: np.ndarray):
    y = np.maximum(x, 0)
    return y, y > 0


def relu_backward(dy: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return dy * mask


def relu(x):
    return np.maximum(np.asarray(x), 0)


def maxpool_nhwc_forward(x: np.ndarray):
    if x.shape[1] % 2 or x.shape[2] % 2:
        raise ShapeError(f"maxpool2d needs even spatial dimensions, got {x.shape[1]}x{x.shape[2]}")
    return maxpool_forward(x)


def maxpool_nhwc_backward(dy: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return maxpool_backward(dy, idx)


def maxpool2d_forward(x: np.ndarray):
    """Channels-first wrapper: (N, C, H, W) or (C, H, W)."""
    single = x.ndim == 3
    xb = x[None] if single else x
    y, idx = maxpool_nhwc_forward(np.ascontiguousarray(xb.transpose(0, 2, 3, 1)))
    y = y.transpose(0, 3, 1, 2)
    return (y[0] if single else y), (idx, single)


def maxpool2d_backward(dy: np.ndarray, cache) -> np.ndarray:
    idx, single = cache
    dyb = dy[None] if single else dy
    dx = maxpool_nhwc_backward(np.ascontiguousarray(dyb.transpose(0, 2, 3, 1)), idx).transpose(0, 3, 1, 2)
    return dx[0] if single else dx


def maxpool2d(x):
    return maxpool2d_forward(np.asarray(x))[0]


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x (N, n) or (n,); w (m, n)."""
    if x.shape[-1] != w.shape[1] or b.shape != (w.shape[0],):
        raise ShapeError(f"dense: input {x.shape}, weights {w.shape}, bias {b.shape}")
    return x @ w.T + b, x


def dense_backward(dy: np.ndarray, x: np.ndarray, w: np.ndarray):
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return dy @ w, dy2.T @ x2, dy2.sum(axis=0)


def dense(x, w, b):
    return dense_forward(np.asarray(x), np.asarray(w), np.asarray(b))[0]


def dropout_forward(x: np.ndarray, p: float, train: bool, rng: np.random.Generator | None = None):
    """Inverted dropout: survivors are scaled by 1/(1-p) so evaluation is the identity."""
    if not 0 <= p < 1:
        raise ValueError("dropout probability must be in [0, 1)")
    if not train or p == 0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    mask = (rng.random(x.shape) >= p).astype(x.dtype) / x.dtype.type(1 - p)
    return x * mask, mask


def dropout_backward(dy: np.ndarray, mask) -> np.ndarray:
    return dy if mask is None else dy * mask


def dropout(x, p: float = 0.5, mode: str = "train", seed: int | np.random.Generator = 0):
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return dropout_forward(np.asarray(x, dtype=np.float64), p, mode == "train", rng)[0]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels):
    """Mean cross-entropy over the batch.

    Returns (loss, probabilities, d loss / d logits).
    """
    logits = np.asarray(logits)
    single = logits.ndim == 1
    z = logits[None] if single else logits
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if labels.shape != (z.shape[0],):
        raise ShapeError("one label per row of logits required")
    if np.any(labels < 0) or np.any(labels >= z.shape[1]):
        raise ValueError(f"label outside 0..{z.shape[1] - 1}")
    shifted = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(z.shape[0])
    loss = float(np.mean(logsum - shifted[rows, labels]))
    p = np.exp(shifted - logsum[:, None])
    grad = p.copy()
    grad[rows, labels] -= 1.0
    grad /= z.shape[0]
    if single:
        return loss, p[0], grad[0]
    return loss, p, grad


def temporal_conv1d_forward(x: np.ndarray, k: np.ndarray, b: np.ndarray):
    """Valid convolution along frames, kernel size 3, stride 1.

    x (N, T, d); k (K, d, 3); output (N, T-2, K).
    """
    if x.ndim != 3 or k.ndim != 3 or k.shape[2] != 3:
        raise ShapeError(f"temporal_conv1d expects (N,T,d) and (K,d,3), got {x.shape}, {k.shape}")
    n, t, d = x.shape
    if t < 3:
        raise ShapeError(f"temporal_conv1d needs at least 3 frames, got {t}")
    if k.shape[1] != d:
        raise ShapeError(f"temporal_conv1d feature mismatch: {d} vs {k.shape[1]}")
    cols = sliding_window_view(x, 3, axis=1).transpose(0, 1, 3, 2).reshape(n * (t - 2), 3 * d)  # (j, d)
    kmat = k.transpose(2, 1, 0).reshape(3 * d, -1)
    y = (cols @ kmat).reshape(n, t - 2, -1) + b
    return y, (x.shape, cols)


def temporal_conv1d_backward(dy: np.ndarray, cache, k: np.ndarray):
    (n, t, d), cols = cache
    kk = k.shape[0]
    dy2 = dy.reshape(-1, kk)
    kmat = k.transpose(2, 1, 0).reshape(3 * d, kk)
    dk = (cols.T @ dy2).reshape(3, d, kk).transpose(2, 1, 0)
    dcols = (dy2 @ kmat.T).reshape(n, t - 2, 3, d)
    dx = np.zeros((n, t, d), dtype=dy.dtype)
    for j in range(3):
        dx[:, j:j + t - 2] += dcols[:, :, j]
    return dx, np.ascontiguousarray(dk), dy2.sum(axis=0)


def temporal_maxpool_forward(x: np.ndarray):
    """(N, T, d) -> (N, d); ties route to the earliest frame."""
    idx = x.argmax(axis=1)
    y = np.take_along_axis(x, idx[:, None, :], axis=1)[:, 0]
    return y, (idx, x.shape[1])


def temporal_maxpool_backward(dy: np.ndarray, cache) -> np.ndarray:
    idx, t = cache
    dx = np.zeros((dy.shape[0], t, dy.shape[1]), dtype=dy.dtype)
    np.put_along_axis(dx, idx[:, None, :], dy[:, None, :], axis=1)
    return dx
