"""Pipeline driver: prompt -> service -> parse -> review queue.

Idempotent per sample id, tolerant to per-sample failures, and bounded to a
fixed number of in-flight service calls. Records that carry validation issues
are still enqueued, with the issues attached for human triage.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..errors import AmodalSegError
from ..data.types import SceneSample
from ..review.store import ReviewStore
from .bundle import build_bundle
from .client import VlmClient, VlmRequest, vlm_generate
from .parse import parse_qa
from .prompts import DEFAULT_TEMPLATE, PromptTemplate, assemble_prompt


@dataclass
class PipelineReport:
    enqueued: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)  # (sample_id, reason)


def _generate_for_sample(sample: SceneSample, client: VlmClient, template: PromptTemplate,
                         image_ref: str | None, max_attempts: int, sleep) -> dict:
    bundle = build_bundle(sample)
    prompt = assemble_prompt(bundle, template)
    response = vlm_generate(
        client, VlmRequest(prompt=prompt, image_ref=image_ref), max_attempts=max_attempts,
        sleep=sleep,
    )
    result = parse_qa(response.text, bundle)
    return {
        "sample_id": sample.sample_id,
        "objects": {
            oid: {"category": info.category, "occlusion_rate": info.occlusion_rate}
            for oid, info in bundle.objects.items()
        },
        "qa_items": [
            {"question": it.question, "answer": it.answer, "target_ids": list(it.target_ids)}
            for it in result.items
        ],
        "issues": [
            {"code": issue.code, "message": issue.message, "item_index": issue.item_index}
            for issue in result.issues
        ],
        "attempts": response.attempts,
    }


def run_pipeline(samples, client: VlmClient, review_store: ReviewStore,
                 template: PromptTemplate = DEFAULT_TEMPLATE, source: dict | None = None,
                 image_refs: dict[str, str] | None = None, max_workers: int = 4,
                 max_attempts: int = 3, sleep=None) -> PipelineReport:
    """Enqueue one ReviewRecord per sample in state "generated".

    Re-running over the same samples never duplicates records; service calls
    run concurrently (at most max_workers in flight) while store writes stay
    serialized in sample order for determinism.
    """
    import time as _time

    sleep = sleep if sleep is not None else _time.sleep
    report = PipelineReport()
    pending = []
    for sample in samples:
        if review_store.has_sample(sample.sample_id):
            report.skipped.append(sample.sample_id)
        else:
            pending.append(sample)

    def job(sample):
        image_ref = image_refs.get(sample.sample_id) if image_refs else None
        return _generate_for_sample(sample, client, template, image_ref, max_attempts, sleep)

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [(sample, pool.submit(job, sample)) for sample in pending]
        for sample, future in futures:
            try:
                payload = future.result()
            except AmodalSegError as exc:
                report.failures.append((sample.sample_id, str(exc)))
                continue
            review_store.create(
                record_id=f"rec-{sample.sample_id}",
                sample_id=sample.sample_id,
                payload=payload,
                source=source or {},
            )
            report.enqueued.append(sample.sample_id)
    return report
