"""Exception hierarchy shared by every solver stage."""


class CAError(Exception):
    """Base class for all covering-array errors."""


class InvalidInstanceError(CAError, ValueError):
    pass


class InvalidArgumentError(CAError, ValueError):
    pass


class InvalidSolutionError(CAError):
    """A test suite violates a forbidden interaction."""


class InfeasibleError(CAError):
    """No valid test (or cover) exists under the forbidden constraints."""


class SolverError(CAError):
    """Numerical failure, contract violation or exhausted budget inside a solver."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
