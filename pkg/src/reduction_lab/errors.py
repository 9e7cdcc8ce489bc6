"""Exception hierarchy.

Validation errors map to CLI exit code 1, numerical failures to exit code 2.
"""


class ReductionError(Exception):
    """Base class for all errors raised by this package."""

    code = "ReductionError"


class ValidationError(ReductionError):
    code = "ValidationError"


class DimensionMismatch(ValidationError):
    code = "DimensionMismatch"


class NonHermitian(ValidationError):
    code = "NonHermitian"


class NonFinite(ValidationError):
    code = "NonFinite"


class ZeroState(ValidationError):
    code = "ZeroState"


class ParseError(ValidationError):
    code = "ParseError"


class SchemaError(ValidationError):
    code = "SchemaError"


class NumericalError(ReductionError):
    code = "NumericalError"


class EigenFailure(NumericalError):
    code = "EigenFailure"


class PoleProximity(NumericalError):
    code = "PoleProximity"


class PoleEvaluation(NumericalError):
    code = "PoleEvaluation"


class BracketFailure(NumericalError):
    code = "BracketFailure"


class ChannelSolveFailure(NumericalError):
    code = "ChannelSolveFailure"


class AllZero(NumericalError):
    code = "AllZero"


class CountMismatch(NumericalError):
    code = "CountMismatch"
