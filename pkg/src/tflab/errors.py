"""Exception hierarchy.

The CLI maps these onto exit codes: :class:`HypothesisError` -> 4, every
other :class:`TflabError` -> 3.
"""


class TflabError(Exception):
    """Base class for library errors."""


class DomainError(TflabError, ValueError):
    """Argument outside the mathematical domain of a function."""


class DegenerateDomainError(TflabError, ValueError):
    """Invalid geometry, e.g. a self-intersecting polygon."""


class UnsupportedShapeError(TflabError):
    pass


class UnsupportedWindowError(TflabError):
    pass


class GridResolutionError(TflabError):
    """A sampled grid cannot resolve the requested quantity."""


class GridCoverageError(TflabError):
    pass


class GridMismatchError(TflabError):
    pass


class DivergenceError(TflabError):
    """A weighted integral fails its tail test."""


class FitFailure(TflabError):
    pass


class QuadratureBudgetError(TflabError):
    pass


class BasisSizeError(TflabError):
    pass


class EigenConvergenceError(TflabError):
    pass


class MemoryBudgetError(TflabError):
    pass


class EmptyInputError(TflabError, ValueError):
    pass


class HypothesisError(TflabError):
    """A theorem hypothesis (beta >= 1/2, s >= 1, eta <= 1, ...) fails."""


class SpectrumRangeError(TflabError):
    """Computed eigenvalues leave [0, 1] by more than the clipping tolerance."""
