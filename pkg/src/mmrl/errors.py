"""Exception hierarchy shared by every module of the package."""


class MMRLError(Exception):
    """Base class for all package errors."""


class DomainError(MMRLError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(MMRLError, ValueError):
    """A configuration document or function descriptor is invalid."""


class AccuracyError(MMRLError, ArithmeticError):
    """Adaptive quadrature exhausted its depth before meeting tolerance."""

    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class BracketError(MMRLError, ArithmeticError):
    """A root bracket does not straddle a sign change."""


class IterationError(MMRLError, ArithmeticError):
    """An iterative solver ran out of iterations."""


class ResourceError(MMRLError, MemoryError):
    """A request exceeds a resource guard (e.g. sheet level too large)."""


class ProtocolError(MMRLError, ValueError):
    """A report was produced under the wrong protocol for a check."""
