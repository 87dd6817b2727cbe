"""Exception hierarchy shared by all modules."""


class HamfieldError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(HamfieldError, ValueError):
    """Operands live on different lattices or have mismatched shapes."""


class ScalarTypeError(HamfieldError, TypeError):
    """Real and complex field functions were mixed."""


class ValidationError(HamfieldError, ValueError):
    """An input violates a structural precondition (symmetry, unitarity, ...)."""


class ConstructionError(HamfieldError, ValueError):
    """A derived object could not be built from otherwise valid input."""


class EvaluationError(HamfieldError, ValueError):
    """An observable could not be evaluated or differentiated."""


class GuardError(HamfieldError, RuntimeError):
    """A numerical guard tripped (stability bound, blow-up, ...)."""


class SingularTrajectoryError(GuardError):
    """Evolution left the bounded region; ``trajectory`` holds the partial result."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NonlinearMapError(HamfieldError, ValueError):
    """A nonlinear map was passed where only linear symplectic maps are representable."""
