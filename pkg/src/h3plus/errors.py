"""Exception types raised across the package."""


class H3PlusError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(H3PlusError, ValueError):
    pass


class InvalidParametersError(H3PlusError, ValueError):
    """Trial-function parameters violate a normalizability condition."""


class SingularConfigurationError(H3PlusError, ArithmeticError):
    """An electron sits on a nucleus or on the other electron."""


class DomainError(H3PlusError, ValueError):
    pass


class PoisonedRegionError(H3PlusError, FloatingPointError):
    """The integrand returned a non-finite value inside a cubature region."""

    def __init__(self, message, point=None, region=None):
        super().__init__(message)
        self.point = point
        self.region = region


class TuningError(H3PlusError, RuntimeError):
    """Metropolis acceptance rate outside the usable window."""

    def __init__(self, message, acceptance_rate):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


class StalledAtBarrierError(H3PlusError, RuntimeError):
    """Every simplex move landed outside the normalizable parameter region."""
