"""Exception hierarchy shared by all modules."""


class BubbleTowerError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BubbleTowerError, ValueError):
    """Input outside the admissible domain of an operation."""


class ConditionError(BubbleTowerError):
    """A structural condition (e.g. the spiral condition) does not hold."""


class CountError(BubbleTowerError):
    """Fewer extrema / bumps than requested."""


class BracketError(BubbleTowerError):
    """A root-finding bracket has no sign change."""


class SingularityError(BubbleTowerError):
    """Evaluation at a singular configuration (coincident points)."""


class PositivityError(BubbleTowerError):
    """Eigenvector with a zero or mixed-sign coordinate."""


class ResolutionError(BubbleTowerError):
    """Sampling grid too coarse for the requested diagnostic."""


class GeometryError(BubbleTowerError):
    """Concentration balls overlap or leave the domain."""


class BlowUpError(BubbleTowerError):
    """Integration left the guarded region; carries the last valid state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ShootingHorizonError(BlowUpError):
    """Heteroclinic shooting stopped before enough minima were found."""


class ConvergenceError(BubbleTowerError):
    """An iterative solver did not converge; carries the last iterate."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class MatchingError(ConvergenceError):
    """Interface Newton iteration stagnated."""


class RegionError(BubbleTowerError):
    """Accepted matching parameters left the trust region."""


class BranchNotFoundError(BubbleTowerError):
    """Amplitude scan found no branch with the requested bump count."""
