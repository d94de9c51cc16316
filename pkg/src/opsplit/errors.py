"""Exception hierarchy shared by all opsplit modules."""


class OpsplitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParams(OpsplitError):
    """A constructor or builder received malformed parameters."""


class InvalidSize(InvalidParams):
    """Grid size below the minimum (m >= 2)."""


class DimensionMismatch(OpsplitError):
    """Vector/operator dimensions disagree."""


class PoleProximity(OpsplitError):
    """Evaluation point is within tolerance of a denominator root."""


class RootFindingFailure(OpsplitError):
    """Companion-matrix root finding or multiplicity detection broke down."""


class IllConditioned(OpsplitError):
    """A linear system's condition estimate exceeded the configured bound."""


class SingularSolve(OpsplitError):
    """A shifted-resolvent factorization failed."""


class ImaginaryResidue(OpsplitError):
    """Real-input evaluation left a non-negligible imaginary part."""


class Overflow(OpsplitError):
    """Matrix exponential produced non-finite entries."""


class UnsupportedProblem(OpsplitError):
    """No closed-form reference solution covers the requested problem."""


class ReferenceUnavailable(OpsplitError):
    """The requested study has no oracle for this problem."""


class SizeLimit(OpsplitError):
    """Dense-norm computation refused (m > 256)."""


class DegenerateData(OpsplitError):
    """Order estimation input is too short or not positive."""


class ConfigError(OpsplitError):
    """Experiment configuration failed validation; message names the field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")
