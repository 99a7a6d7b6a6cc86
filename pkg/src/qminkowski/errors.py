"""Exception hierarchy shared by all modules."""


class QMError(Exception):
    """Base class for every error raised by qminkowski."""


class StructureParseError(QMError, ValueError):
    """Malformed structure file, tensor shape or complex literal."""


class SingularMetricError(QMError, ValueError):
    pass


class StructureInvalidError(QMError):
    """Raised when a structure fails a validation check another module depends on."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CutoffExceeded(QMError):
    pass


class SizeExceeded(QMError):
    pass


class WellDefinednessError(QMError):
    """The derivative homomorphism does not vanish on a relation generator."""


class StarUndefined(QMError):
    pass


class NotRTauError(QMError):
    pass


class NonSymmetricMetricError(QMError):
    pass


class ZNonzeroError(QMError):
    pass


class NonRealMassError(QMError):
    pass


class OnShellPoleError(QMError, ZeroDivisionError):
    pass


class GammaMismatchError(QMError):
    pass


class BraidInvalidError(QMError):
    pass
