"""Exception types raised across the package."""


class EntropicTransportError(Exception):
    """Base class for all package errors."""


class ZeroMass(EntropicTransportError, ValueError):
    pass


class NegativeDensity(EntropicTransportError, ValueError):
    pass


class SupportViolation(EntropicTransportError):
    """A measure puts mass where the reference density vanishes."""


class GridMismatch(EntropicTransportError, ValueError):
    pass


class NonMonotoneMap(EntropicTransportError):
    pass


class NoConvergence(EntropicTransportError, RuntimeError):
    pass


class Unsupported(EntropicTransportError, TypeError):
    pass


class NotEven(EntropicTransportError, ValueError):
    pass


class PreconditionViolation(EntropicTransportError):
    pass


class ThetaOverflow(EntropicTransportError):
    """Wasserstein distance beyond the range where the distortion coefficients are finite."""


class InfiniteFisher(EntropicTransportError):
    pass
