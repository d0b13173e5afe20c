"""Exception hierarchy shared across the package.

Every guard failure raised by the library derives from :class:`WinetraceError`
so callers (and the CLI) can map them to a single exit status.
"""


class WinetraceError(Exception):
    """Base class for all guard errors."""


# record model
class InvalidPedigree(WinetraceError):
    pass


class NonMonotonicTimestamp(WinetraceError):
    pass


class DuplicateRejection(WinetraceError):
    pass


class MalformedRecord(WinetraceError):
    pass


# crypto / vault
class InvalidKey(WinetraceError):
    pass


class InvalidSignature(WinetraceError):
    pass


class Unauthorized(WinetraceError):
    pass


class UnknownMember(WinetraceError):
    pass


# content store
class NotFound(WinetraceError):
    pass


class InvalidHash(WinetraceError):
    pass


# ledger
class RecencyViolation(WinetraceError):
    pass


class NotAuthority(WinetraceError):
    pass


class CheckpointAheadOfChain(WinetraceError):
    pass


# registry
class AlreadyRegistered(WinetraceError):
    pass


class SignatureMismatch(WinetraceError):
    pass


class DuplicateWine(WinetraceError):
    pass


class ReapplicationDetected(WinetraceError):
    pass


class UnknownWine(WinetraceError):
    pass


class NonMonotonicVersion(WinetraceError):
    pass


# validation pipeline
class TagAuthFailed(WinetraceError):
    pass


class PayloadTooLarge(WinetraceError):
    pass


class UnknownField(WinetraceError):
    pass


# orchestrator
class MissingAdmin(WinetraceError):
    pass


class MissingWinemaker(WinetraceError):
    pass


class ConsortiumNotFormed(WinetraceError):
    pass


class ValidationFailed(WinetraceError):
    def __init__(self, reason):
        super().__init__(f"validation failed: {reason.value}")
        self.reason = reason
