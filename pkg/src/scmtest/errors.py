"""Exception types shared across the package."""


class ScmTestError(Exception):
    """Base class for all scmtest errors."""


class InvalidArgumentError(ScmTestError, ValueError):
    """An argument violates a documented precondition."""


class CycleError(ScmTestError):
    """A graph expected to be acyclic contains a cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__(f"graph contains a cycle: {' -> '.join(map(str, self.cycle))}")


class InfeasibleTargetError(ScmTestError):
    """A requested edge perturbation cannot be realized on the given graph."""

    def __init__(self, requested, max_h_plus, max_h_minus):
        self.requested = requested
        self.max_h_plus = max_h_plus
        self.max_h_minus = max_h_minus
        super().__init__(
            f"target {requested} infeasible; at most h_plus={max_h_plus}, "
            f"h_minus={max_h_minus} achievable"
        )


class TableParseError(ScmTestError):
    """A CSV file could not be parsed; carries the offending location."""

    def __init__(self, message, row=None, col=None):
        self.row = row
        self.col = col
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {col})" if col is not None else ")")
        super().__init__(message + loc)


class SplitError(ScmTestError):
    """A train/test split could not be produced."""


class NormalizationError(ScmTestError):
    """A column cannot be z-scored."""

    def __init__(self, column, message):
        self.column = column
        super().__init__(f"column '{column}': {message}")


class DivergenceError(ScmTestError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"non-finite loss at epoch {epoch}")


class ContractViolationError(ScmTestError):
    """An internal API was used outside its contract."""
