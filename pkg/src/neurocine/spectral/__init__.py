from .bands import (
    ALPHA,
    BETA,
    DEFAULT_BANDS,
    THETA,
    BandDefinition,
    BandPowerFrame,
    band_masks,
    band_power,
    band_powers,
    trial_band_powers,
    window_array,
    window_trial,
)
from .fft import dft_power_spectrum, fft, ifft, naive_dft, one_sided_weights
