from __future__ import annotations


class RectSpecError(Exception):
    """Base class for every error raised by rectspec."""


class CurveValidationError(RectSpecError):
    def __init__(self, message: str, verdict=None) -> None:
        super().__init__(message)
        self.verdict = verdict


class CurveFitError(RectSpecError):
    pass


class CurveGenerationError(RectSpecError):
    pass


class EpsilonSelectionError(RectSpecError):
    pass


class DegenerateChord(RectSpecError):
    pass


class NonRegularFiber(RectSpecError):
    pass


class ExcessBoundaryPoints(RectSpecError):
    """Fiber section has more than two boundary points (non-convex curve)."""


class NoConvergence(RectSpecError):
    pass


class DegenerateSolution(RectSpecError):
    pass


class StepFailure(RectSpecError):
    pass


class MeshResolutionError(RectSpecError):
    pass


class DegeneratePosition(RectSpecError):
    """A cone-chain crossing landed within tolerance of a triangle edge."""


class DisjointnessViolated(RectSpecError):
    pass


class PreconditionError(RectSpecError):
    pass


class ArcDomainError(RectSpecError, ValueError):
    pass
