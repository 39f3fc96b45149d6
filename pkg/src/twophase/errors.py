"""Exception types shared across the toolkit."""


class TwophaseError(Exception):
    """Base class for all toolkit errors."""


class SamplingFailure(TwophaseError):
    """The zero level set could not be located inside the bounding box."""


class DegenerateDirection(TwophaseError):
    """Moving-plane scan could not bracket a critical offset (shape error)."""


class AmbiguousEventWarning(UserWarning):
    """Both tangency and orthogonality occur within tolerance; reported, not fatal."""


class SampleOutsideGrid(TwophaseError):
    """Requested interpolation point lies outside the grid box."""


class StencilCollision(TwophaseError):
    """A one-sided stencil crosses the interface or leaves the grid."""


class ReflectionLeavesGrid(TwophaseError):
    """Reflected evaluation points near the contact region exit the grid box."""


class FrameFitError(TwophaseError):
    """Local graph frame could not be fitted to the interface near the corner."""


class NoConvergence(TwophaseError):
    """Iterative linear solve exhausted its iteration budget.

    Carries the best iterate so callers can inspect the partial result.
    """

    def __init__(self, message, best_iterate=None, residual=None, iterations=None):
        super().__init__(message)
        self.best_iterate = best_iterate
        self.residual = residual
        self.iterations = iterations


class SingularOperator(TwophaseError):
    """Pure-Neumann operator with c=0 applied to a right-hand side that is not mean-free."""


class SingularMatching(TwophaseError):
    """The 2x2 interface-matching system is numerically singular (internal error)."""


class ConfigError(TwophaseError):
    """Scenario configuration failed validation."""
