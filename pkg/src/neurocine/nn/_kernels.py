"""2x2/stride-2 max pooling kernels (NHWC), numba and numpy variants.

The argmax index within each block is row-major (0..3); ties keep the
first maximum.
"""

from __future__ import annotations

import numpy as np

from .._backend import njit, use_numba


@njit
def _pool_fwd_nb(x, y, idx):
    n, h, w, c = y.shape
    for a in range(n):
        for i in range(h):
            for j in range(w):
                for k in range(c):
                    best = x[a, 2 * i, 2 * j, k]
                    arg = 0
                    v = x[a, 2 * i, 2 * j + 1, k]
                    if v > best:
                        best = v
                        arg = 1
                    v = x[a, 2 * i + 1, 2 * j, k]
                    if v > best:
                        best = v
                        arg = 2
                    v = x[a, 2 * i + 1, 2 * j + 1, k]
                    if v > best:
                        best = v
                        arg = 3
                    y[a, i, j, k] = best
                    idx[a, i, j, k] = arg


@njit
def _pool_bwd_nb(dy, idx, dx):
    n, h, w, c = dy.shape
    for a in range(n):
        for i in range(h):
            for j in range(w):
                for k in range(c):
                    r = idx[a, i, j, k]
                    dx[a, 2 * i + r // 2, 2 * j + r % 2, k] = dy[a, i, j, k]


def _blocks(x: np.ndarray) -> np.ndarray:
    n, h, w, c = x.shape
    return x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(n, h // 2, w // 2, 4, c)


def maxpool_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, h, w, c = x.shape
    if use_numba():
        y = np.empty((n, h // 2, w // 2, c), dtype=x.dtype)
        idx = np.empty(y.shape, dtype=np.uint8)
        _pool_fwd_nb(np.ascontiguousarray(x), y, idx)
        return y, idx
    b = _blocks(x)
    idx = b.argmax(axis=3).astype(np.uint8)
    y = np.take_along_axis(b, idx[:, :, :, None, :].astype(np.intp), axis=3)[:, :, :, 0, :]
    return y, idx


def maxpool_backward(dy: np.ndarray, idx: np.ndarray) -> np.ndarray:
    n, h, w, c = dy.shape
    if use_numba():
        dx = np.zeros((n, 2 * h, 2 * w, c), dtype=dy.dtype)
        _pool_bwd_nb(np.ascontiguousarray(dy), idx, dx)
        return dx
    b = np.zeros((n, h, w, 4, c), dtype=dy.dtype)
    np.put_along_axis(b, idx[:, :, :, None, :].astype(np.intp), dy[:, :, :, None, :], axis=3)
    return b.reshape(n, h, w, 2, 2, c).transpose(0, 1, 3, 2, 4, 5).reshape(n, 2 * h, 2 * w, c)
