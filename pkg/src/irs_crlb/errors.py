"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DegenerateChannelError(ValueError):
    """A channel gain needed for normalization is zero."""


class SingularFimError(ValueError):
    """The Fisher information matrix is numerically singular.

    Attributes
    ----------
    condition : float
        Condition number of the Jacobi-equilibrated FIM that triggered the error.
    """

    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class InvalidStateError(ValueError):
    """An optimizer state cannot be evaluated (non-finite objective)."""


class NonConvergenceError(RuntimeError):
    """Alternating optimization failed to meet the residual tolerance.

    Attributes
    ----------
    result : DesignResult
        Best design found, returned for inspection.
    trace : list of float
        Objective values recorded during the run.
    """

    def __init__(self, message, result=None, trace=None):
        super().__init__(message)
        self.result = result
        self.trace = trace if trace is not None else []


class ConfigError(ValueError):
    """A scenario configuration is malformed; ``field`` holds the dotted key path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
