"""Exception hierarchy shared by the solvers and the experiment runner."""


class LassoLabError(Exception):
    """Base class for all package errors."""


class RankDeficient(LassoLabError):
    pass


class BadBlockSize(LassoLabError):
    pass


class DimensionMismatch(LassoLabError, ValueError):
    pass


class NoConvergence(LassoLabError):
    pass


class DegenerateTie(LassoLabError):
    """Two homotopy events fell within the event tolerance of each other."""


class RankDeficientFold(LassoLabError):
    """Removing a held-out block left a rank-deficient training design."""


class SingularDowndate(LassoLabError):
    pass


class IoFailure(LassoLabError, OSError):
    pass
