"""Exception types shared across the package."""


class Se3diffError(Exception):
    """Base class for package-specific failures."""


class DegenerateDistanceError(Se3diffError, ValueError):
    """A pairwise distance fell below the degeneracy floor where a
    distance-space quantity (score, direction vector) is undefined."""


class InfeasibleDistanceError(Se3diffError, ValueError):
    """A distance matrix does not embed in three dimensions."""


class NormalizationError(Se3diffError, ValueError):
    """A field had zero variance and could not be normalized."""


class GraphGenerationError(Se3diffError, RuntimeError):
    """Random regular graph sampling exhausted its retry budget."""


class DivergenceError(Se3diffError, RuntimeError):
    """A sampler chain left the finite / bounded regime.

    Attributes
    ----------
    step_index : int or None
        Reverse-time index of the step that triggered the guard.
    """

    def __init__(self, message: str, step_index=None):
        super().__init__(message)
        self.step_index = step_index
