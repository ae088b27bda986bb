from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fft import dft_power_spectrum


@dataclass(frozen=True)
class BandDefinition:
    name: str
    low: float
    high: float

    def __post_init__(self):
        if not 0 < self.low < self.high:
            raise ValueError(f"band {self.name!r}: need 0 < low < high")


THETA = BandDefinition("theta", 4.0, 7.0)
ALPHA = BandDefinition("alpha", 8.0, 13.0)
BETA = BandDefinition("beta", 13.0, 30.0)
DEFAULT_BANDS = (THETA, ALPHA, BETA)


@dataclass(frozen=True)
class BandPowerFrame:
    powers: np.ndarray  # (n_channels, n_bands)
    window_index: int = 0


def window_trial(samples, fs: float, window_seconds: float) -> list[np.ndarray]:
    """Non-overlapping consecutive windows; trailing samples are dropped."""
    x = np.asarray(samples)
    return list(window_array(x, fs, window_seconds).swapaxes(0, -2))


def window_length(fs: float, window_seconds: float) -> int:
    return int(round(fs * window_seconds))


def window_array(x: np.ndarray, fs: float, window_seconds: float) -> np.ndarray:
    """(..., n_samples) -> (..., n_windows, window_length)."""
    n = x.shape[-1]
    w = window_length(fs, window_seconds)
    if w < 1 or w > n:
        raise ValueError(f"window of {w} samples does not fit a trial of {n}")
    k = n // w
    return x[..., : k * w].reshape(x.shape[:-1] + (k, w))


def band_masks(n: int, fs: float, bands=DEFAULT_BANDS) -> np.ndarray:
    """(n_bands, n//2+1) boolean: closed-interval bin membership, DC excluded."""
    freqs = np.arange(n // 2 + 1) * fs / n
    masks = np.zeros((len(bands), freqs.size), dtype=bool)
    for i, band in enumerate(bands):
        if band.low > fs / 2:
            raise ValueError(f"band {band.name!r} lies entirely above Nyquist ({fs / 2} Hz)")
        masks[i] = (freqs >= band.low) & (freqs <= band.high)
    masks[:, 0] = False
    return masks


def band_powers(x, fs: float, bands=DEFAULT_BANDS) -> np.ndarray:
    """(..., N) signals -> (..., n_bands) sum of squared magnitudes per band."""
    x = np.asarray(x, dtype=np.float64)
    masks = band_masks(x.shape[-1], fs, bands)
    return dft_power_spectrum(x) @ masks.T.astype(np.float64)


def band_power(window, fs: float, bands=DEFAULT_BANDS, window_index: int = 0) -> BandPowerFrame:
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[1] < 2:
        raise ValueError(f"window must be (channels, N>=2), got {window.shape}")
    return BandPowerFrame(band_powers(window, fs, bands), window_index)


def trial_band_powers(samples, fs: float, window_seconds: float, bands=DEFAULT_BANDS,
                      chunk: int = 64) -> np.ndarray:
    """(n_trials, channels, time) -> (n_trials, n_windows, channels, n_bands).

    Trials are processed in chunks to bound the complex work arrays.
    """
    samples = np.asarray(samples)
    windows = window_array(samples[:1], fs, window_seconds)
    out = np.empty((samples.shape[0], windows.shape[2], samples.shape[1], len(bands)))
    for start in range(0, samples.shape[0], chunk):
        w = window_array(samples[start:start + chunk].astype(np.float64), fs, window_seconds)
        out[start:start + chunk] = band_powers(w, fs, bands).transpose(0, 2, 1, 3)
    return out
