"""Exact-length discrete Fourier transform.

Mixed-radix decimation in time over the prime factors of N, with
Bluestein's chirp-z algorithm for prime lengths above ``BLUESTEIN_MIN``.
No zero padding ever reaches the caller: every length is transformed
exactly. All transforms act on the last axis and broadcast over the rest.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

BLUESTEIN_MIN = 32


@lru_cache(maxsize=None)
def _smallest_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    p = 3
    while p * p <= n:
        if n % p == 0:
            return p
        p += 2
    return n


def _unit_roots(n: int, exponents: np.ndarray) -> np.ndarray:
    # reduce the exponent mod n before scaling so large products stay accurate
    return np.exp(-2j * np.pi * (exponents % n) / n)


@lru_cache(maxsize=64)
def dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return _unit_roots(n, np.outer(k, k))


@lru_cache(maxsize=64)
def _twiddles(n: int, p: int) -> np.ndarray:
    m = n // p
    return _unit_roots(n, np.outer(np.arange(p), np.arange(m)))


@lru_cache(maxsize=16)
def _bluestein_plan(n: int):
    m = 1
    while m < 2 * n - 1:
        m *= 2
    k = np.arange(n)
    chirp = _unit_roots(2 * n, k * k)  # exp(-i pi k^2 / n)
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:][::-1])
    return m, chirp, _fft(b)


def _bluestein(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    m, chirp, fb = _bluestein_plan(n)
    a = np.zeros(x.shape[:-1] + (m,), dtype=np.complex128)
    a[..., :n] = x * chirp
    conv = _ifft(_fft(a) * fb)
    return conv[..., :n] * chirp


def _fft(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    p = _smallest_factor(n)
    if p == n:
        if n >= BLUESTEIN_MIN:
            return _bluestein(x)
        return x @ dft_matrix(n)
    m = n // p
    # sub-sequence r holds x[j*p + r]; transform each, then combine radix-p butterflies
    sub = _fft(np.swapaxes(x.reshape(x.shape[:-1] + (m, p)), -1, -2))
    sub = sub * _twiddles(n, p)
    if p >= BLUESTEIN_MIN:
        out = np.swapaxes(_fft(np.swapaxes(sub, -1, -2)), -1, -2)
    else:
        out = dft_matrix(p) @ sub
    return out.reshape(x.shape[:-1] + (n,))


def _ifft(x: np.ndarray) -> np.ndarray:
    return np.conj(_fft(np.conj(x))) / x.shape[-1]


def fft(x) -> np.ndarray:
    """Forward DFT along the last axis: X_k = sum_n x_n exp(-2 pi i k n / N)."""
    x = np.asarray(x, dtype=np.complex128)
    if x.shape[-1] < 1:
        raise ValueError("empty transform")
    return _fft(x)


def ifft(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    return _ifft(x)


def naive_dft(x) -> np.ndarray:
    """O(N^2) reference transform."""
    x = np.asarray(x, dtype=np.complex128)
    return x @ dft_matrix(x.shape[-1])


def dft_power_spectrum(samples) -> np.ndarray:
    """One-sided squared magnitudes |X_k|^2 for k = 0..N//2."""
    x = np.asarray(samples, dtype=np.float64)
    n = x.shape[-1]
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    spec = fft(x)[..., : n // 2 + 1]
    return spec.real ** 2 + spec.imag ** 2


def one_sided_weights(n: int) -> np.ndarray:
    """Multiplicities that fold the one-sided spectrum back onto all N bins."""
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return w
