"""Exception hierarchy.

Every error raised on purpose by the library derives from ``LindbladError``;
the CLI maps ``InputError`` subclasses to exit status 1 and
``VerificationError`` subclasses to exit status 2.
"""


class LindbladError(Exception):
    """Base class for all library errors."""


class InputError(LindbladError, ValueError):
    """The caller supplied malformed or inconsistent data."""


class VerificationError(LindbladError, ArithmeticError):
    """A mathematical property that should hold was found violated."""


class NotHermitian(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class SigmaNotStrict(InputError):
    pass


class SupportViolation(InputError):
    pass


class RhoNotStrict(InputError):
    pass


class BadBlockStructure(InputError):
    pass


class DegenerateState(InputError):
    pass


class ZeroEmission(InputError):
    """g2 is undefined because the single-photon emission rate vanishes."""


class CoeffNotPSD(VerificationError):
    pass


class NotLindblad(VerificationError):
    pass


class NotDetailedBalanced(VerificationError):
    pass


class FixedPointsNotAlgebra(VerificationError):
    pass


class FixedAlgebraMismatch(VerificationError):
    pass


class SpanNotIncluded(VerificationError):
    pass


class MethodsDisagree(VerificationError):
    pass


class VerificationFailed(VerificationError):
    pass


class NotGammaShaped(VerificationError):
    pass


class OutsideSpan(VerificationError):
    pass
