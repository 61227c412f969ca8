"""Typed errors shared across the verification stack.

Every error carries a stable machine-readable ``code`` (the class name)
that the HTTP layer serializes verbatim for clients.
"""


class SigverError(Exception):
    def __init__(self, detail: str = ""):
        super().__init__(detail or self.__class__.__name__)
        self.detail = detail

    @property
    def code(self) -> str:
        return self.__class__.__name__


class MalformedRequest(SigverError):
    """Request body does not follow the documented wire format."""


class InvalidUsername(SigverError):
    """Username fails the path-safe naming rule."""


# -- capture / signal errors -------------------------------------------------

class MalformedSample(SigverError):
    """Input does not follow the wire format at all (wrong types/keys)."""


class EmptySample(SigverError):
    """Fewer than two pen-down points."""


class NonMonotonicTime(SigverError):
    """Timestamps not strictly increasing (or negative)."""


class PressureOutOfRange(SigverError):
    """Pressure outside [0, 1]."""


class DegenerateSample(SigverError):
    """All points coincide; zero spatial extent."""


# -- matcher errors ----------------------------------------------------------

class ChannelMismatch(SigverError):
    """Sequences have different channel counts."""


class WrongReferenceCount(SigverError):
    """Model build attempted with the wrong number of references."""


# -- enrollment / user-state errors ------------------------------------------

class DuplicateUser(SigverError):
    pass


class UnknownUser(SigverError):
    pass


class NotAdmin(SigverError):
    pass


class BadTempPassword(SigverError):
    pass


class SessionGapNotElapsed(SigverError):
    pass


class AlreadyEnrolled(SigverError):
    pass


class NotEnrolled(SigverError):
    pass


class UserBlocked(SigverError):
    pass


class NotBlocked(SigverError):
    pass


# -- security errors ---------------------------------------------------------

class ReplayDetected(SigverError):
    """A single-use token was presented twice, or a request was resubmitted."""


class NonceExpired(SigverError):
    pass


class NonceUnknown(SigverError):
    pass


class UnknownTerminal(SigverError):
    pass


class BadMac(SigverError):
    pass


# -- server / tooling errors -------------------------------------------------

class InvalidConfig(SigverError):
    pass


class CorruptStore(SigverError):
    """A persisted file failed to load; detail names the file."""


class InsufficientSamples(SigverError):
    pass


class ScenarioUnsupported(SigverError):
    pass
