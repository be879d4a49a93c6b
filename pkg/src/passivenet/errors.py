"""Exception types shared across the toolkit.

Every numerically-gated operation raises one of these instead of letting a
LinAlgError or silent garbage escape.  The condition-number gates report the
offending block by name so CLI users can see which inverse failed.
"""


class PassiveNetError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(PassiveNetError):
    """Operands have incompatible matrix or port dimensions."""


class SplitMismatch(PassiveNetError):
    """A port-splitting transform needs equal top/bottom widths."""


class NearSpectrum(PassiveNetError):
    """A resolvent solve (s - A)^-1 is too ill-conditioned to trust."""


class SingularFeedthrough(PassiveNetError):
    """Full inversion needs an invertible feedthrough matrix D."""


class SingularBlock(PassiveNetError):
    """A feedthrough sub-block required by a transform is singular.

    Carries the block name ("D11", "D22", "D21", ...) in the message.
    """


class SingularGenerator(PassiveNetError):
    """The internal reciprocal needs an invertible generator A."""


class SingularShiftedFeedthrough(PassiveNetError):
    """The external Cayley transform needs D_i + R invertible."""


class OneEigenvalue(PassiveNetError):
    """The inverse external Cayley transform needs I - D invertible."""


class MinusOneEigenvalue(PassiveNetError):
    """The inverse internal Cayley transform needs I + A_d invertible."""


class NotWellPosed(PassiveNetError):
    """A feedback loop's Delta matrices are singular.

    The attached :class:`~passivenet.feedback.WellPosednessReport` is stored
    on the ``report`` attribute.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ResistanceMismatch(PassiveNetError):
    """Coupled channels of a star product use different resistance blocks."""


class NotProperlyPassive(PassiveNetError):
    """Neither operand of an unregularised star product is properly passive."""


class NotSPD(PassiveNetError):
    """A matrix expected symmetric positive (semi)definite is not."""


class SingularStiffness(PassiveNetError):
    """The general second-order realisation path needs invertible K."""


class OutOfElement(PassiveNetError):
    """A basis function was evaluated outside its element."""


class BadGeometry(PassiveNetError):
    """An area function or mesh request is unusable."""


class ParseError(PassiveNetError):
    """A file could not be parsed; message carries the line number."""


class MonotonicityError(PassiveNetError):
    """Area function nodes must be strictly increasing."""


class CoincidentPoints(PassiveNetError):
    """Loewner interpolation points mu and lambda must be disjoint."""


class PairingViolation(PassiveNetError):
    """Interpolation data is not conjugate-symmetric; cannot realify."""


class RankDeficient(PassiveNetError):
    """The projected Loewner pencil is numerically singular at this order."""


class OutOfEnvelope(PassiveNetError):
    """Special-function argument outside the supported accuracy envelope."""


class ZeroFrequency(PassiveNetError):
    """The piston impedance formula is evaluated away from s = 0."""


class NonPositive(PassiveNetError):
    """Semitone discrepancies need two positive frequencies."""
