"""Exception hierarchy shared by all qfe modules.

The CLI maps these onto exit codes: validation problems exit with 2,
numeric failures with 3 and resource-guard violations with 4.
"""


class QFEError(Exception):
    """Base class for every error raised by qfe."""

    exit_code = 3

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InvalidArgument(QFEError, ValueError):
    exit_code = 2


class InvalidModel(QFEError, ValueError):
    exit_code = 2


class InvalidCorrelation(QFEError, ValueError):
    exit_code = 2


class GridResolutionError(QFEError, ValueError):
    exit_code = 2


class NumericError(QFEError, ArithmeticError):
    exit_code = 3


class SingularModularFlow(NumericError):
    pass


class UndefinedRelativeEntropy(NumericError):
    pass


class NoncommutingPartitionError(QFEError, ValueError):
    exit_code = 3


class ResourceLimit(QFEError, MemoryError):
    exit_code = 4


class CutoffWarning(UserWarning):
    """Truncated Fock space discards more probability mass than allowed."""
