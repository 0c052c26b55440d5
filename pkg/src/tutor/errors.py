"""Exception types shared across the tutor package."""

from __future__ import annotations


class TutorError(Exception):
    """Base class for all tutor-specific errors."""


# --- knowledge base -------------------------------------------------------

class EmptyDocument(TutorError):
    """Document body is blank after whitespace normalization."""


class DimensionMismatch(TutorError):
    """Vector dimensions disagree (query vs index, chunk vs provider)."""


class CorruptIndex(TutorError):
    """Persisted index failed its checksum or structural checks."""


class VersionUnsupported(TutorError):
    """Persisted index uses an unknown format version."""


# --- prompt policy --------------------------------------------------------

class MissingContext(TutorError):
    """Awareness level demands a task description or code snapshot that is absent."""


# --- providers ------------------------------------------------------------

class ProviderUnavailable(TutorError):
    """Backend could not be reached or kept failing after retries."""

    def __init__(self, message: str = "provider unavailable", *,
                 retry_after: float | None = None, attempts: int = 1):
        super().__init__(message)
        self.retry_after = retry_after
        self.attempts = attempts


class ProviderRejected(TutorError):
    """Backend rejected the request outright (bad key, oversized prompt)."""

    def __init__(self, message: str = "provider rejected request", *, status_code: int | None = None):
        super().__init__(message)
        self.status_code = status_code


class ScriptExhausted(TutorError):
    """Mock provider received more calls than scripted entries."""


# --- service --------------------------------------------------------------

class UnknownThread(TutorError):
    """No session exists for the given thread identifier."""


class UnknownTask(TutorError):
    """No task exists for the given task identifier."""


class InvalidConfig(TutorError):
    """Runtime config patch violated an invariant; carries per-field diagnostics."""

    def __init__(self, fields: dict[str, str]):
        super().__init__("invalid config: " + "; ".join(f"{k}: {v}" for k, v in sorted(fields.items())))
        self.fields = dict(fields)


# --- telemetry ------------------------------------------------------------

class SinkUnavailable(TutorError):
    """Telemetry sink rejected a record; the request itself must still succeed."""


# --- analytics ------------------------------------------------------------

class UnsortedInput(TutorError):
    """Interaction records were not sorted by (thread_id, timestamp)."""


class UnknownCategory(TutorError):
    """Tag value is not one of the twelve question categories."""


class UnknownMergedId(TutorError):
    """Tag refers to a merged interaction that does not exist."""
