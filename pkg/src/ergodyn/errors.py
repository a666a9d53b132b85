"""Exception types shared across the package."""


class ErgodynError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ErgodynError, ValueError):
    """A parameter is outside its documented range."""


class InvalidKernelError(ErgodynError, ValueError):
    """Matrix data cannot be validated as a transition kernel."""


class InvalidObservableError(ErgodynError, ValueError):
    """Observable values are not finite reals of the right length."""


class InvalidMeasureError(ErgodynError, ValueError):
    """Weights are not a probability vector under the tolerance policy."""


class DimensionError(ErgodynError, ValueError):
    """Operands live on different partitions or have mismatched sizes."""


class NotStationaryError(ErgodynError, ValueError):
    """A measure required to be fixed by the dual operator is not.

    Carries the l1 residual in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConvergenceError(ErgodynError, RuntimeError):
    """An iterative solve hit its iteration cap.

    Carries the last residual in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class PreconditionError(ErgodynError, ValueError):
    """A theorem check was invoked with a violated hypothesis.

    ``name`` identifies the failing precondition.
    """

    def __init__(self, message, name=None):
        super().__init__(message)
        self.name = name
