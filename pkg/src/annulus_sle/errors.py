"""Exception hierarchy shared by all modules."""


class AnnulusSLEError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(AnnulusSLEError, ValueError):
    """Input violates a precondition (CLI exit code 1)."""


class NumericalError(AnnulusSLEError, ArithmeticError):
    """A numerical procedure failed (CLI exit code 2)."""


class OutOfRange(ValidationError):
    pass


class NonConvergent(NumericalError):
    pass


class PoleProximity(ValidationError):
    pass


class CoincidentPoints(ValidationError):
    pass


class NeutralityViolation(ValidationError):
    pass


class BoundaryRenormalizationRequired(ValidationError):
    pass


class BranchTrackingError(NumericalError):
    pass


class PoleAtKappa(ValidationError):
    pass


class KappaOutOfRange(ValidationError):
    pass


class KappaNotResidueCase(ValidationError):
    pass


class KappaNotTabulated(ValidationError):
    pass


class BranchCutViolation(ValidationError):
    pass


class QuadratureNonConvergent(NumericalError):
    pass


class HypergeometricNonConvergent(NumericalError):
    pass


class Swallowed(NumericalError):
    """A tracked point entered the swallow guard zone.

    ``state`` is the last state before the offending step.
    """

    def __init__(self, label, state=None):
        super().__init__(f"tracked point {label!r} swallowed at t={getattr(state, 't', float('nan')):.6g}")
        self.label = label
        self.state = state


class ForcePointSwallowed(Swallowed):
    pass


class ReverseFlowDiverged(NumericalError):
    pass


class TooManySwallowed(NumericalError):
    pass
