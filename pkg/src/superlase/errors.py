"""Exception types raised by the numerical kernels and solvers."""


class SuperlaseError(Exception):
    """Base class for all numerical failures in this package."""


class NumericalFailure(SuperlaseError):
    """A computation did not reach its accuracy target."""


class NoConvergence(NumericalFailure):
    pass


class QuadratureNoConvergence(NoConvergence):
    pass


class TruncationNotConverged(NoConvergence):
    pass


class NotRelaxed(NoConvergence):
    """Time integration ended before the steady-state certificate was met."""


class NullSpaceDegenerate(NumericalFailure):
    """The operator has more than one (numerically) vanishing singular value."""


class Singular(NumericalFailure):
    """The operator has no null vector compatible with the trace functional."""


class OverflowGuard(NumericalFailure):
    """A log-space magnitude exceeds the range of a double."""


class ArgumentOutOfRange(SuperlaseError, ValueError):
    pass


class EpsilonOutOfRange(SuperlaseError, ValueError):
    pass
