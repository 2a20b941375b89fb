"""Exception hierarchy shared across the solver."""


class ETRSError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ETRSError, ValueError):
    pass


class NonSymmetric(ETRSError, ValueError):
    pass


class ZeroRowInfeasible(ETRSError, ValueError):
    """A constraint row is identically zero but its right-hand side is negative."""


class EigenFailure(ETRSError, RuntimeError):
    pass


class PoleProximity(ETRSError, ValueError):
    """Secular function evaluated too close to one of its poles."""


class CombinatorialBudgetExceeded(ETRSError, RuntimeError):
    """An enumeration would visit more combinations than the configured budget."""


BudgetExceeded = CombinatorialBudgetExceeded


class Infeasible(ETRSError):
    """The feasible set of a (sub)problem is empty."""


class InfeasibleProblem(Infeasible):
    """The top-level instance has no feasible point."""


class Unbounded(ETRSError):
    pass


class ZeroNormal(ETRSError, ValueError):
    pass


class ZeroDirection(ETRSError, ValueError):
    pass


class BadOption(ETRSError, ValueError):
    pass


class ParseError(ETRSError, ValueError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column

    def __str__(self):
        msg = super().__str__()
        if self.line is not None:
            return f"line {self.line}, column {self.column}: {msg}"
        return msg
