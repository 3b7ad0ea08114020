"""Exception taxonomy shared across the package."""


class AmodalSegError(Exception):
    """Base class for all package errors."""


class GeometryError(AmodalSegError):
    """Mask geometry violates a precondition (subset rule, empty amodal, ...)."""


class ShapeError(AmodalSegError):
    """Array shapes do not line up."""


class DatasetFormatError(AmodalSegError):
    """A dataset file on disk is unreadable or corrupt."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class ValidationError(AmodalSegError):
    """Data violates a documented invariant."""

    def __init__(self, message: str, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations is not None else []


class GenerationError(AmodalSegError):
    """Scene synthesis could not satisfy the configured constraints."""


class VocabularyError(AmodalSegError):
    """A token or token id is outside the model vocabulary."""


class ConfigurationError(AmodalSegError):
    """A config value is invalid or inconsistent with the requested operation."""


class UndefinedLossError(AmodalSegError):
    """The loss is undefined on this input (e.g. all-pad target)."""


class UndefinedMetricError(AmodalSegError):
    """The metric is undefined on this input (e.g. empty pair list)."""


class CheckpointError(AmodalSegError):
    """Checkpoint file is corrupt or fails its integrity check."""


class TrainingDivergedError(AmodalSegError):
    """Training hit a non-finite loss; carries a diagnostic snapshot."""

    def __init__(self, message: str, snapshot: dict):
        super().__init__(message)
        self.snapshot = snapshot


class PromptAssemblyError(AmodalSegError):
    """Prompt template is missing a required section or the bundle is unusable."""


class EnvelopeError(AmodalSegError):
    """Service response does not contain the instructed machine-readable envelope."""


class TransientServiceError(AmodalSegError):
    """Retryable failure from the generation service (timeouts, 5xx, 429)."""


class ServiceAuthError(AmodalSegError):
    """Authentication with the generation service failed; never retried."""


class TransportError(AmodalSegError):
    """Service call failed after exhausting retries."""

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class ReviewConflictError(AmodalSegError):
    """Optimistic concurrency check failed (stale version)."""


class ReviewPolicyError(AmodalSegError):
    """Action violates the review policy (self-review, non-distinct checker, ...)."""


class ReviewStateError(AmodalSegError):
    """Action is not legal from the record's current state."""
