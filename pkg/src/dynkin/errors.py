"""Exception taxonomy shared across the package."""


class DynkinError(Exception):
    """Base class for all package errors."""


class ValidationError(DynkinError):
    """Malformed configuration or inconsistent inputs."""


class ClassificationConflict(DynkinError):
    """No ordering region matched at a grid point (internal assertion)."""


class KinkEvaluation(DynkinError):
    """Generator evaluated at a kink point; use kink_jump there."""


class NotAKink(DynkinError):
    """kink_jump called at a point that is not a declared kink."""


class OrderingViolation(DynkinError):
    """Associated payoffs came out with f_tilde > g_tilde somewhere."""


class ObstacleCrossing(DynkinError):
    """Lower obstacle exceeds upper obstacle."""


class NonConvergence(DynkinError):
    """Iterative solver failed to converge within its iteration budget."""

    def __init__(self, message, max_residual=None):
        super().__init__(message)
        self.max_residual = max_residual


class NonContraction(DynkinError):
    """Value iteration failed to reach a fixed point (typically r = 0)."""


class HypothesisViolated(DynkinError):
    """Explicit Nash construction requested outside its validity region."""


class DegenerateInterval(DynkinError):
    """Exit-interval search produced an empty interval (internal assertion)."""


class CalibrationFailure(DynkinError):
    """Randomization intensity hit its cap before meeting the target."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class SimulationPrecondition(DynkinError):
    """Simulation request violates a documented precondition."""
