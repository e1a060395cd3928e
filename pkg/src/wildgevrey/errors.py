"""Exception hierarchy shared by every module.

The CLI maps each family onto an exit code, so callers should raise the most
specific class available.
"""


class WildGevreyError(Exception):
    """Base class for all package errors."""


class ConfigError(WildGevreyError, ValueError):
    """Invalid parameters or run configuration."""


class DomainError(WildGevreyError, ValueError):
    """Argument outside the domain of a kernel or function."""


class ResolutionError(WildGevreyError, ArithmeticError):
    """A discretisation (quadrature, grid, time step) is too coarse."""


class TruncationError(ResolutionError):
    """The truncated Wild sum cannot meet the requested accuracy."""


class NormalizationError(WildGevreyError, ValueError):
    """A spectral state violates f(0) = 1 or |f| <= 1."""


class EnvelopeError(WildGevreyError, ValueError):
    """An envelope cannot be derived from the supplied data."""
