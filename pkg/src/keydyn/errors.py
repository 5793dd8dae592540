"""Exception types shared across the package."""


class KeydynError(Exception):
    """Base class for every error raised by this package."""


class SessionFormatError(KeydynError):
    """Session document is malformed or violates telemetry invariants."""


class UnknownKeyError(SessionFormatError):
    """Key identifier is neither a printable character nor a known named key."""


class InsufficientTelemetryError(KeydynError):
    """Too few complete key events to extract timing features."""


class DimensionMismatchError(KeydynError):
    """Feature dimensions disagree between a vector and stored ranges."""


class ProfileNotTrainedError(KeydynError):
    """Profile holds fewer training vectors than the configured minimum."""


class EmptyContextClusterError(KeydynError):
    """Context cluster contains no historical members to derive thresholds from."""


class DuplicateUserError(KeydynError):
    """Enrollment attempted for a username that already exists."""


class InsufficientTrainingError(KeydynError):
    """Enrollment supplied fewer sessions than the training minimum."""


class TrainingSessionMismatchError(KeydynError):
    """A training session does not reproduce the enrolled credentials."""

    def __init__(self, message: str, index: int) -> None:
        super().__init__(message)
        self.index = index


class UnknownUserError(KeydynError):
    """Lookup for a username that is not in the store."""


class StoreCorruptError(KeydynError):
    """Store file failed to parse or is structurally invalid."""

    def __init__(self, message: str, offset: int | None = None) -> None:
        super().__init__(message)
        self.offset = offset


class StoreVersionError(KeydynError):
    """Store file carries a version tag this build does not understand."""


class UnknownChallengeError(KeydynError):
    """Challenge id does not correspond to any issued challenge."""


class ChallengeClosedError(KeydynError):
    """Verification attempted on a challenge already in a terminal state."""


class ChallengeKindError(KeydynError):
    """Verification method does not match the challenge kind."""
