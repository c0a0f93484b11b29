"""Exception hierarchy shared by all whitemetric modules."""


class WhiteMetricError(Exception):
    """Base class for all whitemetric errors."""


class DimensionMismatch(WhiteMetricError):
    """Operands live in different dimensions."""


class ShapeMismatch(WhiteMetricError):
    """Array shapes disagree where they must match entrywise."""


class DegenerateCoordinate(WhiteMetricError):
    """A coordinate has (numerically) zero variance.

    The offending coordinate index is stored in ``index``.
    """

    def __init__(self, index: int, message: str | None = None):
        self.index = int(index)
        super().__init__(message or f"coordinate {index} has zero variance")


class NearSingular(WhiteMetricError):
    """A matrix is too close to singular for the requested operation."""


class SizeLimitExceeded(WhiteMetricError):
    """A dense solver was asked for a problem above its configured limit."""


class NoConvergence(WhiteMetricError):
    """An iterative solver hit its iteration cap before converging.

    ``iterations`` records the cap that was exhausted.
    """

    def __init__(self, iterations: int, message: str | None = None):
        self.iterations = int(iterations)
        super().__init__(message or f"no convergence after {iterations} iterations")


class ZeroMean(WhiteMetricError):
    """The whitened mean vanishes, so a mean-normalised index is undefined."""


class RankDeficient(WhiteMetricError):
    """A regression design matrix is numerically rank deficient."""


class DataFormatError(WhiteMetricError):
    """Strict file ingestion failed; carries the offending location."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        self.row = row
        self.column = column
        super().__init__(message)
