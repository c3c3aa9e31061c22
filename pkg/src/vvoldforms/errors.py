"""Exception hierarchy.

Every error raised by the library derives from :class:`FQMError`, which is a
``ValueError`` so callers that only care about bad input can catch that.
"""


class FQMError(ValueError):
    """Base class for all library errors."""


class ValidationError(FQMError):
    pass


class InvalidOrderError(FQMError):
    """A root of unity was requested in a cyclotomic field that cannot hold it."""


class DegenerateError(FQMError):
    pass


class NotEvenError(ValidationError):
    pass


class IsotropyError(FQMError):
    pass


class SizeBoundError(FQMError):
    """An exhaustive computation would exceed the configured size bound."""


class UnsupportedSignatureError(FQMError):
    pass


class NotInSL2Error(FQMError):
    pass


class NonUnimodularError(FQMError):
    pass


class UnsupportedPrimeError(FQMError):
    pass


class PrimitivityError(FQMError):
    pass


class UseRank1SplittingError(FQMError):
    """The vector has unit norm; split it off as a rank one block instead."""


class NotFoundError(FQMError):
    pass


class RankError(FQMError):
    pass


class HypothesisError(FQMError):
    pass


class CertificateError(FQMError):
    pass
