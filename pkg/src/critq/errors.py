"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""


class CritqError(Exception):
    exit_code = 1


class ValidationError(CritqError, ValueError):
    """Bad input: violated type invariant, malformed file, out-of-range argument."""

    exit_code = 2


class DomainError(ValidationError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedPowerError(ValidationError):
    pass


class TrustRangeError(ValidationError):
    pass


class DuplicateFunctionError(ValidationError):
    pass


class NumericalError(CritqError, ArithmeticError):
    exit_code = 3


class NonConvergenceError(NumericalError):
    pass


class IllConditionedError(NumericalError):
    pass


class FitError(NumericalError):
    """Least-squares or critical-charge search could not produce a model."""


class StorageError(CritqError, OSError):
    exit_code = 4
