from .records import (
    Event,
    ReviewPolicy,
    ReviewRecord,
    apply_event,
    claim,
    cross_check,
    replay,
    submit_review,
    validate_qa_items,
)
from .store import NotFoundError, ReviewStore

__all__ = [
    "Event",
    "NotFoundError",
    "ReviewPolicy",
    "ReviewRecord",
    "ReviewStore",
    "apply_event",
    "claim",
    "cross_check",
    "replay",
    "submit_review",
    "validate_qa_items",
]
