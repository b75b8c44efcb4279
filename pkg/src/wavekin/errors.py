"""Exception types raised across the package."""


class WavekinError(Exception):
    """Base class for all package errors."""


class DomainError(WavekinError, ValueError):
    """Input outside the mathematical domain of an operation (non-finite, negative width, ...)."""


class SingularityError(DomainError):
    """Evaluation at a point where the quantity is undefined, e.g. massless group velocity at k = 0."""


class UsageError(WavekinError, ValueError):
    """Valid numbers, invalid request (off-node grid lookup, boundary stencil, bad margin)."""


class DegenerateFieldError(WavekinError, ValueError):
    """Field norm is zero or too small to normalize expectation values."""


class NumericalConsistencyError(WavekinError, RuntimeError):
    """An internal numerical identity failed, usually a sign the grid is too coarse or too small."""

    def __init__(self, check, message):
        super().__init__(f"{check}: {message}")
        self.check = check


class ConfigError(WavekinError, ValueError):
    """Run configuration could not be parsed or validated."""
