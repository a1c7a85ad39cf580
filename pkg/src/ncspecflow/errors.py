"""Exception hierarchy shared by all modules.

Every refusal raised by the library derives from :class:`SpecflowError`.
Subclasses of :class:`ValidationError` mark inputs the caller should fix
(the CLI maps them to exit code 2); :class:`CrossCheckFailed` marks a
disagreement between independent computations (exit code 4).
"""


class SpecflowError(Exception):
    """Base class for all library errors."""


class ValidationError(SpecflowError):
    """The input violates a documented precondition."""


class NotHermitian(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class NotProjection(ValidationError):
    pass


class NotLagrangian(ValidationError):
    pass


class NotOdd(ValidationError):
    pass


class NotNormalizing(ValidationError):
    pass


class NotAlmostInvolution(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class UnsupportedHomomorphism(ValidationError):
    pass


class BoundaryHitsSpectrum(ValidationError):
    pass


class GapHitsSpectrum(ValidationError):
    pass


class SingularSample(ValidationError):
    pass


class SingularEndpoint(ValidationError):
    pass


class SamplingTooCoarse(ValidationError):
    pass


class InvalidPath(ValidationError):
    """Raised when a path fails validation; carries the validity record."""

    def __init__(self, message, validity=None):
        super().__init__(message)
        self.validity = validity


class NoGapFound(ValidationError):
    pass


class EndpointMismatch(ValidationError):
    pass


class NonConstantRank(ValidationError):
    pass


class RankJump(ValidationError):
    pass


class KernelRankJump(ValidationError):
    pass


class NotTransverse(ValidationError):
    pass


class DegenerateForm(ValidationError):
    pass


class UnresolvedCrossing(ValidationError):
    pass


class ThetaInconsistent(ValidationError):
    pass


class ScanTooCoarse(ValidationError):
    pass


class GaplessSuspension(SpecflowError):
    """Should never happen for valid input; signals a bug."""


class CrossCheckFailed(SpecflowError):
    """Two independent computations of the same quantity disagree."""


class InconsistentConventions(SpecflowError):
    """No single sign assignment satisfies every orientation fixture."""
