"""Parsing and validation of generated question/answer batches.

The service is instructed to return a JSON array of exactly ten items; this
module recovers that envelope (tolerating code fences), then validates every
item so flawed ones can be routed to human revision instead of discarded.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..errors import EnvelopeError
from ..data.types import SEG_TOKEN
from .bundle import ObjectAnnotationBundle
from .prompts import QA_PAIR_COUNT

_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.S)


@dataclass(frozen=True)
class QAItem:
    question: str
    answer: str
    target_ids: tuple[str, ...]


@dataclass(frozen=True)
class ParseIssue:
    code: str  # count | seg-mismatch | unknown-target | no-targets | empty-field | item-shape
    message: str
    item_index: int | None = None


@dataclass
class ParseResult:
    items: list[QAItem]
    issues: list[ParseIssue]

    @property
    def clean(self) -> bool:
        return not self.issues


def serialize_items(items) -> str:
    """Inverse of parse_qa on valid items (round-trip identity, tested)."""
    return json.dumps(
        [
            {"question": it.question, "answer": it.answer, "targets": list(it.target_ids)}
            for it in items
        ]
    )


def _extract_envelope(raw_text: str):
    text = raw_text.strip()
    fenced = _FENCE_RE.search(text)
    if fenced:
        text = fenced.group(1).strip()
    if not text.startswith("["):
        start = text.find("[")
        end = text.rfind("]")
        if start == -1 or end <= start:
            raise EnvelopeError("no JSON array found in response")
        text = text[start : end + 1]
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EnvelopeError(f"response is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, list):
        raise EnvelopeError(f"expected a JSON array, got {type(data).__name__}")
    return data


def parse_qa(raw_text: str, bundle: ObjectAnnotationBundle,
             expected_count: int = QA_PAIR_COUNT) -> ParseResult:
    """Parse the instructed envelope into QA items plus itemized issues.

    A wrong pair count or per-item violation does not drop the parsed data;
    violations become issues for the review workflow to triage.
    """
    data = _extract_envelope(raw_text)
    items: list[QAItem] = []
    issues: list[ParseIssue] = []
    if len(data) != expected_count:
        issues.append(
            ParseIssue("count", f"expected {expected_count} QA pairs, got {len(data)}")
        )
    for idx, entry in enumerate(data):
        if not isinstance(entry, dict):
            issues.append(ParseIssue("item-shape", f"item {idx} is not an object", idx))
            continue
        question = entry.get("question")
        answer = entry.get("answer")
        targets = entry.get("targets")
        if not isinstance(question, str) or not isinstance(answer, str) or not isinstance(targets, list):
            issues.append(
                ParseIssue("item-shape", f"item {idx} must have question/answer/targets", idx)
            )
            continue
        item = QAItem(question=question, answer=answer, target_ids=tuple(str(t) for t in targets))
        items.append(item)
        if not question.strip() or not answer.strip():
            issues.append(ParseIssue("empty-field", f"item {idx} has an empty question or answer", idx))
        if not item.target_ids:
            issues.append(ParseIssue("no-targets", f"item {idx} references no objects", idx))
        seg_count = answer.count(SEG_TOKEN)
        if seg_count != len(item.target_ids):
            issues.append(
                ParseIssue(
                    "seg-mismatch",
                    f"item {idx} has {seg_count} {SEG_TOKEN} but {len(item.target_ids)} target(s)",
                    idx,
                )
            )
        for tid in item.target_ids:
            if tid not in bundle.objects:
                issues.append(
                    ParseIssue("unknown-target", f"item {idx} references unknown object {tid!r}", idx)
                )
    return ParseResult(items=items, issues=issues)
