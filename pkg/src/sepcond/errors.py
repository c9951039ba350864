"""Exception hierarchy.

Everything derived from :class:`DomainError` maps to CLI exit status 1.
"""


class DomainError(ValueError):
    pass


class NotHermitian(DomainError):
    pass


class NotUnit(DomainError):
    pass


class IdentityMismatch(DomainError):
    pass


class DegenerateSpectrum(DomainError):
    pass


class InvalidSource(DomainError):
    pass


class Infeasible(DomainError):
    pass


class EmptyLog(DomainError):
    pass


class NonRealCoefficient(DomainError):
    pass


class NotPSD(DomainError):
    pass


class SingularDesign(DomainError):
    pass


class OutOfDomain(DomainError):
    pass


class NotNormalized(DomainError):
    pass


class InsufficientPoints(DomainError):
    pass


class UnitarityError(DomainError):
    pass


class FormatError(DomainError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
