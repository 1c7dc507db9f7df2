"""Exception hierarchy.

Every error raised by the package derives from :class:`MetricKernelError`.
``ValidationError`` subclasses map to CLI exit code 1, ``InputFormatError``
to exit code 2.
"""


class MetricKernelError(Exception):
    """Base class for all package errors."""


class ValidationError(MetricKernelError, ValueError):
    """Invalid input or configuration."""


class InputFormatError(MetricKernelError):
    """Unreadable or malformed input file."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


# metric spaces

class AsymmetryError(ValidationError):
    pass


class NegativeDistanceError(ValidationError):
    pass


class NonzeroDiagonalError(ValidationError):
    pass


class TriangleViolation(ValidationError):
    pass


class EmptyInputError(ValidationError):
    pass


class DisconnectedGraphError(ValidationError):
    pass


class NonpositiveWeightError(ValidationError):
    pass


class SpaceTooLarge(ValidationError):
    pass


# coverings

class EtaOutOfRange(ValidationError):
    pass


class BudgetOutOfRange(ValidationError):
    pass


# scalar kernels

class InvalidKernelSpec(ValidationError):
    pass


class DomainExceeded(ValidationError):
    pass


class DivergentSeries(ValidationError):
    pass


class NegativeArgument(ValidationError):
    pass


# embeddings

class QOutOfRange(ValidationError):
    pass


class NOutOfRange(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ConfigMismatch(ValidationError):
    pass


class InternalInfeasible(MetricKernelError, AssertionError):
    """The series-splitting greedy found no admissible region.

    Cannot happen for admissible ``q``; seeing it means a bug.
    """


# kernel engine / analysis

class EmptySubset(ValidationError):
    pass


class NonSymmetricInput(ValidationError):
    pass


class InsufficientPrefix(ValidationError):
    pass


class MeasureSpaceMismatch(ValidationError):
    pass


class NegativeRadicand(MetricKernelError, ArithmeticError):
    """MMD radicand below the rounding clamp; points to a PSD defect."""


class SolveFailure(MetricKernelError, ArithmeticError):
    """Cholesky factorisation broke down."""
