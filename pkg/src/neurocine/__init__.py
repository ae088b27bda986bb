"""neurocine: EEG trials to multi-spectral image sequences, and the
recurrent-convolutional networks that classify them."""

__version__ = "0.1.0"
