"""Exception hierarchy shared by every module of the package."""


class RmdError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(RmdError, ValueError):
    pass


class SingularMatrix(RmdError, ArithmeticError):
    pass


class RankDeficient(RmdError, ArithmeticError):
    pass


class InfeasiblePoint(RmdError, ValueError):
    """A point or tangent vector violates its feasibility tolerance."""


class TangentMismatch(InfeasiblePoint):
    pass


class DomainViolation(RmdError, ValueError):
    pass


class DegenerateInput(RmdError, ValueError):
    pass


class OutOfChart(RmdError, ArithmeticError):
    """The dual iterate left the domain where the mirror map is invertible."""


class InvalidK(RmdError, ValueError):
    pass


class DegenerateScale(RmdError, ArithmeticError):
    pass


class NonpositiveMetric(RmdError, ArithmeticError):
    pass


class ConfigError(RmdError, ValueError):
    pass


class SolverError(RmdError):
    """Wraps a step failure with the iteration at which it happened."""

    def __init__(self, iteration, cause):
        super().__init__(f"iteration {iteration}: {type(cause).__name__}: {cause}")
        self.iteration = iteration
        self.cause = cause
