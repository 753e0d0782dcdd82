"""Exception hierarchy shared by all modules."""


class MixerError(Exception):
    """Base class for package errors."""


class DomainError(MixerError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NoRootError(MixerError, ValueError):
    """Requested fixed point does not exist for these parameters."""


class SimplexError(MixerError, ValueError):
    """Vector is not a probability vector."""


class ConvergenceError(MixerError, RuntimeError):
    """Bracketing or iterative search failed."""


class SizeError(MixerError, ValueError):
    """Exact enumeration requested beyond its size gate."""


class SupportError(MixerError, ValueError):
    """Sampled state lies outside the reference support."""


class ConfigError(MixerError, ValueError):
    """Invalid experiment configuration."""


class IoError(MixerError, OSError):
    """Output could not be written."""
