"""Exception hierarchy shared by every stage of the pipeline."""


class TSLassoError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(TSLassoError, ValueError):
    """Input file is malformed (ragged rows, non-numeric or non-finite values)."""


class ConfigError(TSLassoError, ValueError):
    """Invalid or incomplete configuration."""


class ShapeError(TSLassoError, ValueError):
    """Array shapes do not agree."""


class DegenerateWeights(TSLassoError, ValueError):
    """All kernel weights of a neighborhood are zero."""


class RankDeficient(TSLassoError, ValueError):
    """A matrix that must have rank ``d`` does not.

    ``points`` lists offending point indices when known.
    """

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = list(points) if points is not None else []


class GeometryError(TSLassoError, ValueError):
    """Molecular geometry is degenerate (coincident or collinear atoms)."""


class ZeroGradientFunction(TSLassoError, ValueError):
    """A dictionary function has zero gradient on every sample point."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotConverged(TSLassoError, RuntimeError):
    """Solver hit ``max_iter``; carries the partial result."""

    def __init__(self, message, coef=None, report=None):
        super().__init__(message)
        self.coef = coef
        self.report = report


class UnreachableSupport(TSLassoError, RuntimeError):
    """No probed regularization value yields exactly the requested support size."""


