"""Exception types shared across the toolkit.

Everything derives from PlfkitError so callers (and the CLI) can catch
domain failures in one place and map them to exit code 1.
"""


class PlfkitError(Exception):
    """Base class for all toolkit errors."""


class AudioFormatError(PlfkitError):
    """Unreadable or unsupported audio file (malformed header, empty data)."""


class TooShortError(PlfkitError):
    """Input has fewer frames/samples than the operation's minimum."""


class SpecValidationError(PlfkitError):
    """Conversion-spec file violates an invariant (names row/column)."""


class ShapeError(PlfkitError):
    """Array dimensions inconsistent with the declared contract."""


class CorpusError(PlfkitError):
    """Corpus-level problem: empty corpus, too few speakers, bad config."""


class TrainingDivergedError(PlfkitError):
    """Loss became non-finite during optimization."""


class CheckpointMismatchError(PlfkitError):
    """Checkpoint was trained against a different conversion spec."""


class UndefinedRateError(PlfkitError):
    """Error rate requested against an empty reference."""


class UndefinedCorrelationError(PlfkitError):
    """Correlation requested for a zero-variance sequence."""
