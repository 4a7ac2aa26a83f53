"""Domain exception hierarchy shared by all elguard modules."""


class ElGuardError(Exception):
    """Base class for every error raised by this package."""


# --- score-stack container / file format ---

class ElsmFormatError(ElGuardError):
    """A byte stream is not a valid ELSM container."""


class BadMagic(ElsmFormatError):
    pass


class UnsupportedVersion(ElsmFormatError):
    pass


class UnsupportedDtype(ElsmFormatError):
    pass


class UnsupportedFlags(ElsmFormatError):
    pass


class SizeMismatch(ElsmFormatError):
    """Declared dimensions do not match the payload length."""


class NonFiniteScore(ElGuardError):
    """A score value is NaN or infinite."""


class ScoreOutOfRange(ElGuardError):
    """A score value falls outside [0, 1]."""


class ScoresNotNormalized(ElGuardError):
    """Per-pixel scores do not sum to 1 within tolerance."""


class ValueOutOfRange(ElGuardError):
    """A mask value is illegal for the requested mask kind."""


# --- scene generation ---

class SpecInfeasible(ElGuardError):
    """A requested rectangle cannot fit inside the image."""


# --- segmentation ---

class SampleOutOfRange(ElGuardError):
    pass


class PaletteSizeMismatch(ElGuardError):
    pass


# --- monitoring ---

class RegionOutOfBounds(ElGuardError):
    pass


# --- landing-zone selection ---

class TileLargerThanImage(ElGuardError):
    pass


# --- decision state machine ---

class IllegalEvent(ElGuardError):
    """An event was delivered in a phase where it is not allowed."""


# --- risk tailoring ---

class NonPositiveHeight(ElGuardError):
    pass


class NonPositiveMass(ElGuardError):
    pass


class NoMatchingRow(ElGuardError):
    """The configured risk tables have no entry for the requested key."""


class UnknownMitigationKind(ElGuardError):
    pass


class UnknownOutcome(ElGuardError):
    pass
