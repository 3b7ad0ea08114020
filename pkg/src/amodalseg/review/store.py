"""Review record store: append-only event log plus periodic snapshots.

All mutations on one record are serialized by a compare-and-swap on the
version under a store lock; reads return immutable record objects. Crash
recovery replays ``events.jsonl`` on top of the newest snapshot.
"""
from __future__ import annotations

import json
import threading
import time
from pathlib import Path

from ..errors import AmodalSegError, ReviewConflictError
from .records import Event, ReviewPolicy, ReviewRecord, apply_event, claim, cross_check, submit_review


class NotFoundError(AmodalSegError):
    pass


class ReviewStore:
    SNAPSHOT_EVERY = 50  # events between snapshots

    def __init__(self, root, policy: ReviewPolicy = ReviewPolicy(), clock=time.time):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.policy = policy
        self.clock = clock
        self._lock = threading.Lock()
        self._records: dict[str, ReviewRecord] = {}
        self._events_since_snapshot = 0
        self._recover()

    # ---- persistence ----

    @property
    def _log_path(self) -> Path:
        return self.root / "events.jsonl"

    @property
    def _snapshot_path(self) -> Path:
        return self.root / "snapshot.json"

    def _recover(self) -> None:
        snapshot_seq = 0
        if self._snapshot_path.exists():
            snap = json.loads(self._snapshot_path.read_text())
            snapshot_seq = snap["event_seq"]
            self._records = {
                rid: ReviewRecord.from_dict(d) for rid, d in snap["records"].items()
            }
        if self._log_path.exists():
            with self._log_path.open() as fh:
                for seq, line in enumerate(fh, start=1):
                    if seq <= snapshot_seq:
                        continue
                    entry = json.loads(line)
                    rid = entry["record_id"]
                    event = Event.from_dict(entry["event"])
                    self._records[rid] = apply_event(self._records.get(rid), rid, event)
                    self._events_since_snapshot += 1
        self._event_seq = snapshot_seq + self._events_since_snapshot

    def _append(self, record_id: str, event: Event, record: ReviewRecord) -> None:
        with self._log_path.open("a") as fh:
            fh.write(json.dumps({"record_id": record_id, "event": event.to_dict()}) + "\n")
        self._records[record_id] = record
        self._event_seq += 1
        self._events_since_snapshot += 1
        if self._events_since_snapshot >= self.SNAPSHOT_EVERY:
            self._write_snapshot()

    def _write_snapshot(self) -> None:
        snap = {
            "event_seq": self._event_seq,
            "records": {rid: rec.to_dict() for rid, rec in self._records.items()},
        }
        tmp = self._snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(snap))
        tmp.replace(self._snapshot_path)
        self._events_since_snapshot = 0

    # ---- reads ----

    def get(self, record_id: str) -> ReviewRecord:
        record = self._records.get(record_id)
        if record is None:
            raise NotFoundError(f"no record {record_id!r}")
        return record

    def list_records(self, state: str | None = None) -> list[ReviewRecord]:
        records = sorted(self._records.values(), key=lambda r: r.record_id)
        if state is not None:
            records = [r for r in records if r.state == state]
        return records

    def has_sample(self, sample_id: str) -> bool:
        return any(r.sample_id == sample_id for r in self._records.values())

    # ---- mutations ----

    def create(self, record_id: str, sample_id: str, payload: dict, source: dict | None = None,
               actor: str = "pipeline") -> ReviewRecord:
        with self._lock:
            if record_id in self._records:
                raise ReviewConflictError(f"record {record_id!r} already exists")
            event = Event(
                actor, "created", self.clock(),
                {"sample_id": sample_id, "payload": payload, "source": source or {}},
            )
            record = apply_event(None, record_id, event)
            self._append(record_id, event, record)
            return record

    def _mutate(self, record_id: str, fn) -> ReviewRecord:
        with self._lock:
            record = self.get(record_id)
            updated = fn(record)
            self._append(record_id, updated.history[-1], updated)
            return updated

    def claim(self, record_id: str, annotator: str, version: int) -> ReviewRecord:
        return self._mutate(record_id, lambda r: claim(r, annotator, version, self.clock()))

    def submit_review(self, record_id: str, annotator: str, decision: str, version: int,
                      edited_items=None) -> ReviewRecord:
        return self._mutate(
            record_id,
            lambda r: submit_review(
                r, annotator, decision, version, self.clock(), edited_items, self.policy
            ),
        )

    def cross_check(self, record_id: str, annotator: str, verdict: str, version: int,
                    reason: str | None = None) -> ReviewRecord:
        return self._mutate(
            record_id,
            lambda r: cross_check(r, annotator, verdict, version, self.clock(), reason, self.policy),
        )

    # ---- export ----

    def export_finalized(self, out_dir, dataset_dirs: dict[str, str] | None = None):
        """Write finalized records as a dataset directory, ordered by record id.

        Source samples are looked up in the datasets referenced by each
        record's ``source`` entry (overridable through dataset_dirs, keyed by
        the recorded dataset path).
        """
        from ..data.io import load_dataset, save_dataset
        from ..data.types import Conversation, SceneSample

        cache: dict[str, dict] = {}
        samples = []
        for record in self.list_records(state="finalized"):
            dataset_path = record.source.get("dataset")
            if dataset_path is None:
                raise AmodalSegError(f"record {record.record_id!r} has no source dataset")
            key = str(dataset_path)
            if dataset_dirs and key in dataset_dirs:
                key = str(dataset_dirs[key])
            if key not in cache:
                cache[key] = {s.sample_id: s for s in load_dataset(key)}
            base = cache[key][record.sample_id]
            conversations = tuple(
                Conversation(
                    question=item["question"],
                    answer=item["answer"],
                    target_ids=tuple(item.get("target_ids", item.get("targets", []))),
                )
                for item in record.payload.get("qa_items", [])
            )
            samples.append(
                SceneSample(
                    sample_id=base.sample_id,
                    image=base.image,
                    objects=base.objects,
                    conversations=conversations,
                    depth_order=base.depth_order,
                )
            )
        return save_dataset(samples, out_dir, meta={"exported_from": "review-store"})
