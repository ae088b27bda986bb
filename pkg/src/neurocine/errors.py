class NeurocineError(Exception):
    """Base class for all package errors."""


class FormatError(NeurocineError, ValueError):
    """A file does not conform to its declared format."""


class ConfigError(NeurocineError, ValueError):
    """A configuration value is missing or out of range."""


class ShapeError(NeurocineError, ValueError):
    """Array shapes are incompatible with an operation."""
