"""HTTP+JSON API over the review store, consumed by the browser UI.

Endpoints (documented in docs/api.md)::

    GET  /records?state=...          list records (summaries)
    GET  /records/{id}               full record
    POST /records/{id}/claim         {"version": int}
    POST /records/{id}/review        {"version": int, "decision": "approve"|"revise", "items": [...]}
    POST /records/{id}/cross-check   {"version": int, "verdict": "approve"|"dispute", "reason": str}
    GET  /export?out=DIR             write finalized records as a dataset directory
    GET  /assets/{sample_id}/image.png

The annotator id arrives in the X-Annotator header (pass-through auth). Error
payloads carry machine-readable codes: conflict, policy, validation,
not_found. A built review UI directory, when provided, is served under /ui.
"""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Header, Query
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..errors import (
    ReviewConflictError,
    ReviewPolicyError,
    ReviewStateError,
    ValidationError,
)
from ..data.rle import encode_mask
from .store import NotFoundError, ReviewStore

ERROR_STATUS = {
    "conflict": 409,
    "policy": 403,
    "validation": 422,
    "not_found": 404,
}


class ClaimBody(BaseModel):
    version: int


class ReviewBody(BaseModel):
    version: int
    decision: str
    items: list[dict] | None = None


class CrossCheckBody(BaseModel):
    version: int
    verdict: str
    reason: str | None = None


def _error(code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=ERROR_STATUS[code], content={"code": code, "message": message})


class _SampleCache:
    """Loads the backing dataset once and serves mask views per sample."""

    def __init__(self, dataset_dir: Path | None):
        self.dataset_dir = dataset_dir
        self._samples: dict | None = None

    def masks_for(self, sample_id: str) -> dict:
        if self.dataset_dir is None:
            return {}
        if self._samples is None:
            try:
                from ..data.io import load_dataset

                self._samples = {s.sample_id: s for s in load_dataset(self.dataset_dir)}
            except Exception:
                self._samples = {}
        sample = self._samples.get(sample_id)
        if sample is None:
            return {}
        return {
            oid: {
                "visible_rle": encode_mask(tgt.visible_mask),
                "amodal_rle": encode_mask(tgt.amodal_mask),
                "category": tgt.category,
            }
            for oid, tgt in sample.objects.items()
        }


def _record_view(record, cache: "_SampleCache") -> dict:
    view = record.to_dict()
    view["image_url"] = f"/assets/{record.sample_id}/image.png"
    if cache.dataset_dir is not None:
        view["masks"] = cache.masks_for(record.sample_id)
    return view


def create_app(store: ReviewStore, dataset_dir=None, static_dir=None) -> FastAPI:
    app = FastAPI(title="review-service")
    dataset_path = Path(dataset_dir) if dataset_dir else None
    cache = _SampleCache(dataset_path)

    def _run(fn):
        try:
            return fn()
        except ReviewConflictError as exc:
            return _error("conflict", str(exc))
        except ReviewPolicyError as exc:
            return _error("policy", str(exc))
        except ReviewStateError as exc:
            return _error("conflict", str(exc))
        except ValidationError as exc:
            detail = str(exc)
            if exc.violations:
                detail += ": " + "; ".join(str(v) for v in exc.violations)
            return _error("validation", detail)
        except NotFoundError as exc:
            return _error("not_found", str(exc))

    @app.get("/records")
    def list_records(state: str | None = Query(default=None)):
        records = store.list_records(state=state)
        return {
            "records": [
                {
                    "record_id": r.record_id,
                    "sample_id": r.sample_id,
                    "state": r.state,
                    "version": r.version,
                    "assignments": r.assignments,
                    "qa_count": len(r.payload.get("qa_items", [])),
                    "issue_count": len(r.payload.get("issues", [])),
                }
                for r in records
            ]
        }

    @app.get("/records/{record_id}")
    def get_record(record_id: str):
        return _run(lambda: _record_view(store.get(record_id), cache))

    @app.post("/records/{record_id}/claim")
    def claim(record_id: str, body: ClaimBody, x_annotator: str = Header(default="")):
        if not x_annotator:
            return _error("policy", "X-Annotator header is required")
        return _run(
            lambda: _record_view(store.claim(record_id, x_annotator, body.version), cache)
        )

    @app.post("/records/{record_id}/review")
    def review(record_id: str, body: ReviewBody, x_annotator: str = Header(default="")):
        if not x_annotator:
            return _error("policy", "X-Annotator header is required")
        return _run(
            lambda: _record_view(
                store.submit_review(
                    record_id, x_annotator, body.decision, body.version, body.items
                ),
                cache,
            )
        )

    @app.post("/records/{record_id}/cross-check")
    def cross_check(record_id: str, body: CrossCheckBody, x_annotator: str = Header(default="")):
        if not x_annotator:
            return _error("policy", "X-Annotator header is required")
        return _run(
            lambda: _record_view(
                store.cross_check(record_id, x_annotator, body.verdict, body.version, body.reason),
                cache,
            )
        )

    @app.get("/export")
    def export(out: str = Query(...)):
        def run_export():
            path = store.export_finalized(out)
            count = len(store.list_records(state="finalized"))
            return {"out": str(path), "finalized": count}

        return _run(run_export)

    @app.get("/assets/{sample_id}/image.png")
    def image(sample_id: str):
        if dataset_path is None:
            return _error("not_found", "service was started without a dataset directory")
        image_path = dataset_path / "images" / f"{sample_id}.png"
        if not image_path.exists():
            return _error("not_found", f"no image for sample {sample_id!r}")
        return FileResponse(image_path, media_type="image/png")

    if static_dir and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
