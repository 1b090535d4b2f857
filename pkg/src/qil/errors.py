"""Exception types raised across the package."""


class QILError(ValueError):
    """Base class for all package errors."""


class EmptyData(QILError):
    pass


class InvalidProbability(QILError):
    pass


class DegenerateColumn(QILError):
    pass


class InvalidStatistic(QILError):
    pass


class NumericalError(QILError):
    pass


class DegenerateQuantiles(QILError):
    pass


class DegenerateModel(QILError):
    pass


class InvalidPrecision(QILError):
    pass


class DegenerateScatter(QILError):
    pass


class InvalidGraph(QILError):
    pass


class InvalidDraws(QILError):
    pass


class DegenerateWeights(QILError):
    pass


class NoConvergence(QILError):
    """Optimizer failed to converge.

    Attributes
    ----------
    best : numpy.ndarray or None
        Best iterate found before giving up.
    best_value : float
        Objective value at ``best``.
    diagnostics : dict
        Per-start information (objective values, evaluation counts).
    """

    def __init__(self, message, best=None, best_value=float("nan"), diagnostics=None):
        super().__init__(message)
        self.best = best
        self.best_value = best_value
        self.diagnostics = diagnostics or {}
