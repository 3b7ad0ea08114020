"""Event-sourced review records and the pure state machine over them.

States::

    generated --claim--> in_review --approve--> cross_check --approve(2nd distinct)--> finalized
                              |                     |
                              +--revise--> revised  +--dispute--> needs_revision --claim--> in_review
                                             |
                                             +--claim(distinct)--> cross_check

Every accepted mutation appends exactly one event and bumps the version by
one; folding the history over nothing reproduces the record bit for bit.
Finalization requires approvals from at least ``policy.min_approvals``
distinct annotators within the current revision cycle; after
``policy.dispute_cap`` disputes the record is replaced and needs a fresh
human-authored sample.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import (
    ReviewConflictError,
    ReviewPolicyError,
    ReviewStateError,
    ValidationError,
)
from ..data.types import SEG_TOKEN

STATES = ("generated", "in_review", "needs_revision", "revised", "cross_check", "finalized", "replaced")
TERMINAL_STATES = ("finalized", "replaced")


@dataclass(frozen=True)
class ReviewPolicy:
    min_approvals: int = 2
    dispute_cap: int = 5


@dataclass(frozen=True)
class Event:
    actor: str
    action: str
    timestamp: float
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"actor": self.actor, "action": self.action, "timestamp": self.timestamp, "data": self.data}

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        return cls(actor=d["actor"], action=d["action"], timestamp=d["timestamp"], data=d.get("data", {}))


@dataclass(frozen=True)
class ReviewRecord:
    record_id: str
    sample_id: str
    payload: dict
    source: dict
    state: str
    version: int
    assignments: dict
    approvals: tuple[str, ...]
    revisers: tuple[str, ...]
    dispute_count: int
    revision_count: int
    history: tuple[Event, ...]

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "sample_id": self.sample_id,
            "payload": self.payload,
            "source": self.source,
            "state": self.state,
            "version": self.version,
            "assignments": self.assignments,
            "approvals": list(self.approvals),
            "revisers": list(self.revisers),
            "dispute_count": self.dispute_count,
            "revision_count": self.revision_count,
            "history": [e.to_dict() for e in self.history],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewRecord":
        return cls(
            record_id=d["record_id"],
            sample_id=d["sample_id"],
            payload=d["payload"],
            source=d["source"],
            state=d["state"],
            version=d["version"],
            assignments=dict(d["assignments"]),
            approvals=tuple(d["approvals"]),
            revisers=tuple(d["revisers"]),
            dispute_count=d["dispute_count"],
            revision_count=d["revision_count"],
            history=tuple(Event.from_dict(e) for e in d["history"]),
        )


def apply_event(record: ReviewRecord | None, record_id: str, event: Event) -> ReviewRecord:
    """Mechanical fold step; all validation happens before the event is built."""
    action, data = event.action, event.data
    if action == "created":
        return ReviewRecord(
            record_id=record_id,
            sample_id=data["sample_id"],
            payload=data["payload"],
            source=data.get("source", {}),
            state="generated",
            version=1,
            assignments={},
            approvals=(),
            revisers=(),
            dispute_count=0,
            revision_count=0,
            history=(event,),
        )
    assert record is not None
    nxt = replace(record, version=record.version + 1, history=record.history + (event,))
    if action == "claimed":
        assignments = dict(record.assignments)
        assignments[data["phase"]] = event.actor
        return replace(nxt, state=data["to_state"], assignments=assignments)
    if action == "approved":
        return replace(nxt, state="cross_check", approvals=record.approvals + (event.actor,))
    if action == "revised":
        payload = dict(record.payload)
        payload["qa_items"] = data["items"]
        return replace(
            nxt,
            state=data["to_state"],
            payload=payload,
            approvals=(),
            revisers=(event.actor,),
            revision_count=record.revision_count + 1,
            assignments={},
        )
    if action == "cross_check_approved":
        approvals = record.approvals + (event.actor,)
        state = "finalized" if data["finalize"] else "cross_check"
        assignments = {k: v for k, v in record.assignments.items() if k != "cross_check"}
        return replace(nxt, state=state, approvals=approvals, assignments=assignments)
    if action == "disputed":
        return replace(
            nxt,
            state=data["to_state"],
            dispute_count=record.dispute_count + 1,
            approvals=(),
            assignments={},
        )
    raise ValueError(f"unknown event action {action!r}")


def replay(record_id: str, events) -> ReviewRecord:
    record: ReviewRecord | None = None
    for event in events:
        record = apply_event(record, record_id, event)
    if record is None:
        raise ValueError(f"no events for record {record_id!r}")
    return record


def validate_qa_items(items, payload) -> list[str]:
    """Dataset-core conversation rules against the record's object ids."""
    known = set(payload.get("objects", {}))
    problems = []
    for idx, item in enumerate(items):
        question = item.get("question", "")
        answer = item.get("answer", "")
        targets = item.get("target_ids", item.get("targets", []))
        if not str(question).strip() or not str(answer).strip():
            problems.append(f"item {idx}: empty question or answer")
        seg_count = str(answer).count(SEG_TOKEN)
        if seg_count != len(targets):
            problems.append(
                f"item {idx}: {seg_count} {SEG_TOKEN} marker(s) but {len(targets)} target(s)"
            )
        if len(targets) < 1:
            problems.append(f"item {idx}: no targets")
        for tid in targets:
            if known and tid not in known:
                problems.append(f"item {idx}: unknown object {tid!r}")
    return problems


def _check_version(record: ReviewRecord, version: int) -> None:
    if version != record.version:
        raise ReviewConflictError(
            f"record {record.record_id!r} is at version {record.version}, not {version}"
        )


def claim(record: ReviewRecord, annotator: str, version: int, now: float) -> ReviewRecord:
    _check_version(record, version)
    if record.state == "generated":
        phase, to_state = "review", "in_review"
    elif record.state == "needs_revision":
        phase, to_state = "review", "in_review"
    elif record.state == "revised":
        if annotator in record.revisers:
            raise ReviewPolicyError(
                f"{annotator!r} authored the pending revision and cannot cross-check it"
            )
        phase, to_state = "cross_check", "cross_check"
    else:
        raise ReviewStateError(f"cannot claim a record in state {record.state!r}")
    event = Event(annotator, "claimed", now, {"phase": phase, "to_state": to_state})
    return apply_event(record, record.record_id, event)


def submit_review(record: ReviewRecord, annotator: str, decision: str, version: int,
                  now: float, edited_items=None, policy: ReviewPolicy = ReviewPolicy()) -> ReviewRecord:
    _check_version(record, version)
    if record.state != "in_review":
        raise ReviewStateError(f"cannot review a record in state {record.state!r}")
    if record.assignments.get("review") != annotator:
        raise ReviewPolicyError(f"{annotator!r} does not hold the review claim")
    if decision == "approve":
        event = Event(annotator, "approved", now, {})
        return apply_event(record, record.record_id, event)
    if decision == "revise":
        if edited_items is None:
            raise ValidationError("revise decision requires edited QA items")
        problems = validate_qa_items(edited_items, record.payload)
        if problems:
            raise ValidationError("edited QA items are invalid", problems)
        exceeded = record.revision_count + 1 > policy.dispute_cap
        event = Event(
            annotator,
            "revised",
            now,
            {
                "items": list(edited_items),
                "to_state": "replaced" if exceeded else "revised",
                "diff": {"before": record.payload.get("qa_items", []), "after": list(edited_items)},
            },
        )
        return apply_event(record, record.record_id, event)
    raise ValidationError(f"unknown review decision {decision!r}")


def cross_check(record: ReviewRecord, annotator: str, verdict: str, version: int,
                now: float, reason: str | None = None,
                policy: ReviewPolicy = ReviewPolicy()) -> ReviewRecord:
    _check_version(record, version)
    if record.state != "cross_check":
        raise ReviewStateError(f"cannot cross-check a record in state {record.state!r}")
    if annotator in record.approvals or annotator in record.revisers:
        raise ReviewPolicyError(
            f"{annotator!r} already approved or revised this cycle; cross-check needs a distinct annotator"
        )
    assignee = record.assignments.get("cross_check")
    if assignee is not None and assignee != annotator:
        raise ReviewPolicyError(f"record is claimed for cross-check by {assignee!r}")
    if verdict == "approve":
        distinct = len(set(record.approvals) | {annotator})
        event = Event(
            annotator, "cross_check_approved", now, {"finalize": distinct >= policy.min_approvals}
        )
        return apply_event(record, record.record_id, event)
    if verdict == "dispute":
        if not reason:
            raise ValidationError("dispute requires a reason")
        exceeded = record.dispute_count + 1 > policy.dispute_cap
        event = Event(
            annotator,
            "disputed",
            now,
            {"reason": reason, "to_state": "replaced" if exceeded else "needs_revision"},
        )
        return apply_event(record, record.record_id, event)
    raise ValidationError(f"unknown cross-check verdict {verdict!r}")
