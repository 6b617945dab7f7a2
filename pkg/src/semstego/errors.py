"""Exception types shared across the toolkit."""


class SemStegoError(Exception):
    """Base class for all toolkit errors."""


class TreeFormatError(SemStegoError):
    """An entity-tree file is malformed or violates an invariant."""


class DistributionError(SemStegoError):
    """A class distribution cannot be built or loaded."""


class DeadPrefixError(SemStegoError):
    """A type prefix has zero continuation mass (corrupted walk state)."""


class UnknownClassError(SemStegoError):
    """A type has zero probability under the distribution and no interval."""


class NoCapacityError(SemStegoError):
    """The distribution has a single class, so no bits can be embedded."""


class CodecError(SemStegoError):
    """The arithmetic-coding walk cannot make progress."""


class GenerationFailedError(SemStegoError):
    """The feedback loop exhausted its iteration budget."""

    def __init__(self, message: str, last_hint: str = ""):
        super().__init__(message)
        self.last_hint = last_hint


class ExtractionFailedError(SemStegoError):
    """The extraction agent returned an unparseable reply twice."""


class AgentError(SemStegoError):
    """Transport-level agent failure."""

    category = "agent"


class AgentAuthError(AgentError):
    category = "auth"


class AgentTimeoutError(AgentError):
    category = "timeout"


class AgentHTTPError(AgentError):
    category = "http"

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class TruncatedMessageError(SemStegoError):
    """Recovered bits are inconsistent with the framed message length."""


class StegoFormatError(SemStegoError):
    """A stego message or trace file is malformed."""


class ConfigError(SemStegoError):
    """CLI or session configuration is invalid."""
