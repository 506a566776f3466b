"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation.

    ``param`` names the offending argument when one can be singled out.
    """

    def __init__(self, message, param=None):
        super().__init__(message)
        self.param = param


class MomentDivergenceError(DomainError):
    """A requested moment does not exist for the given law."""

    def __init__(self, message, order=None, valid_range=None, param=None):
        super().__init__(message, param=param)
        self.order = order
        self.valid_range = valid_range


class NonConvergenceError(RuntimeError):
    """A numerical procedure missed its accuracy target.

    The best estimate reached so far is kept on ``estimate`` and any
    procedure-specific diagnostics on ``info``.
    """

    def __init__(self, message, estimate=None, error=None, info=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.info = info or {}
