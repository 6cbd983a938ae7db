"""Exception hierarchy shared by the numerical modules and the CLI."""

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_NUMERICAL_FAILURE = 3
EXIT_VERIFICATION_FAILED = 4


class GaussCapError(Exception):
    exit_code = 1


class InvalidInputError(GaussCapError, ValueError):
    """Input violates a documented precondition."""
    exit_code = EXIT_INVALID_INPUT

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class UnsupportedInputError(InvalidInputError):
    """Input is well formed but outside the supported (nondegenerate) regime."""


class NumericalFailureError(GaussCapError, ArithmeticError):
    """An iterative method stopped without meeting its tolerance."""
    exit_code = EXIT_NUMERICAL_FAILURE

    def __init__(self, message, best=None, value=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.value = value
        self.iterations = iterations


class VerificationFailedError(GaussCapError):
    exit_code = EXIT_VERIFICATION_FAILED

    def __init__(self, message, checks=None, outputs=None):
        super().__init__(message)
        self.checks = checks or []
        self.outputs = outputs or {}
