"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific type that applies rather than bare ValueError.
"""


class TaperlabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TaperlabError):
    """Invalid configuration or parameters (bad K/N, malformed config JSON, ...)."""


class InputError(TaperlabError):
    """Invalid input data (signal too short, unreadable or non-conforming WAV, ...)."""


class ShapeError(TaperlabError):
    """Mismatched array shapes between cooperating arguments."""


class DivergenceError(TaperlabError):
    """Training loss became non-finite."""


class InvalidCenterError(TaperlabError):
    """Attenuation-width center bin does not sit on a usable spectral peak."""


class StaleCacheError(TaperlabError):
    """Backward pass invoked with a cache from an older optimizer step."""
