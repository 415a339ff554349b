"""Exception hierarchy shared by all modules."""


class HessquotError(Exception):
    """Base class for every error raised by this package."""


class IndexRangeError(HessquotError, IndexError):
    pass


class AdmissibilityError(HessquotError, ValueError):
    """Spectrum or matrix outside the cone/set an operation requires."""


class DivisionDomainError(HessquotError, ZeroDivisionError):
    pass


class DomainError(HessquotError, ValueError):
    """Evaluation point outside the profile's domain."""


class NumericalError(HessquotError, ArithmeticError):
    pass


class ThresholdError(HessquotError, ValueError):
    """c1 does not exceed the subsolution threshold."""


class DivergenceError(HessquotError, ValueError):
    """An improper integral that must be finite is not (H <= 1 or beta <= 2)."""


class RangeError(HessquotError, ValueError):
    """Requested value is below the attainable range of a monotone map."""


class BarrierConstructionError(HessquotError, RuntimeError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConfigurationError(HessquotError, ValueError):
    pass


class NonconvergenceError(HessquotError, RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


class InitializationError(HessquotError, ValueError):
    pass


class FitRangeError(HessquotError, ValueError):
    pass


class DegenerateDomainError(HessquotError, ValueError):
    pass


class CertificateMissingError(HessquotError, ValueError):
    """Comparison requested without residual certificates for both sides."""
