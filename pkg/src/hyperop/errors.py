"""Exception hierarchy.

Everything derives from :class:`HyperopError`.  The CLI maps
:class:`InputError` to exit code 2 and every other subclass to exit code 1.
"""


class HyperopError(Exception):
    pass


class InputError(HyperopError, ValueError):
    """Malformed input: bad JSON, wrong shapes, unknown names."""


class TagMismatchError(HyperopError, ValueError):
    pass


class DomainError(HyperopError, ValueError):
    """Argument outside the domain of the operation (``inverse(0)``, ``polar_log(0)``)."""


class PreconditionError(HyperopError, ValueError):
    pass


class DependentInputError(PreconditionError):
    def __init__(self, index, pivot, message=None):
        self.index = index
        self.pivot = pivot
        super().__init__(message or f"input vector {index} is dependent on its predecessors (pivot norm {pivot:.3e})")


class DegenerateDistanceError(PreconditionError):
    pass


class SpectrumHitError(PreconditionError):
    """``zI - T`` is numerically singular; ``sigma_min`` carries the smallest singular value."""

    def __init__(self, z, sigma_min, scale):
        self.z = z
        self.sigma_min = sigma_min
        self.scale = scale
        super().__init__(f"z = {z} lies in the spectrum: sigma_min = {sigma_min:.3e} (scale {scale:.3e})")


class DivergenceRiskError(PreconditionError):
    pass


class ContourPlacementError(PreconditionError):
    pass


class NotPositiveError(PreconditionError):
    pass


class UnsupportedAlgebraError(PreconditionError):
    pass


class NonOrthogonalError(PreconditionError):
    pass


class ClosureCapError(HyperopError):
    pass


class SignedGramError(PreconditionError):
    pass


class StateMismatchError(PreconditionError):
    pass


class AbsoluteContinuityError(PreconditionError):
    def __init__(self, point, message=None):
        self.point = point
        super().__init__(message or f"absolute continuity violated at point {point!r}")
