"""On-disk dataset format: manifest + per-sample records + lossless PNG images.

Layout (documented in docs/formats.md)::

    <dataset>/
      manifest.json        format_version, schema, sample ids, free-form meta
      samples/<id>.json    depth order, conversations, per-object RLE masks
      images/<id>.png      8-bit RGB; in-memory images are uint8/255 floats

Writes are deterministic: fixed key order, no timestamps, so identical inputs
produce byte-identical directories.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from ..errors import DatasetFormatError, ValidationError
from .rle import decode_mask, encode_mask
from .types import Conversation, SceneSample, SegTarget
from .validate import validate_sample

FORMAT_VERSION = 1
SCHEMA = "scene-dataset-v1"


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _load_json(path: Path) -> dict:
    text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"cannot parse {path.name}: {exc.msg}", byte_offset=exc.pos) from exc


def quantize_image(image: np.ndarray) -> np.ndarray:
    """Snap channel values onto the 8-bit grid so PNG round trips are bit-exact."""
    arr = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return (np.round(arr * 255.0).astype(np.uint8) / np.float32(255.0)).astype(np.float32)


def _image_to_png(image: np.ndarray, path: Path) -> None:
    arr = np.round(np.asarray(image, dtype=np.float64) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def _png_to_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, SyntaxError) as exc:
        raise DatasetFormatError(f"cannot decode image {path.name}: {exc}") from exc
    return (arr / np.float32(255.0)).astype(np.float32)


def _target_record(tgt: SegTarget) -> dict:
    return {
        "category": tgt.category,
        "occlusion_rate": tgt.occlusion_rate,
        "visible_rle": encode_mask(tgt.visible_mask),
        "amodal_rle": encode_mask(tgt.amodal_mask),
        "visible_box": list(tgt.visible_box) if tgt.visible_box else None,
        "amodal_box": list(tgt.amodal_box) if tgt.amodal_box else None,
    }


def save_dataset(samples, path, meta: dict | None = None) -> Path:
    """Write samples to a dataset directory; rejects invalid samples up front."""
    samples = list(samples)
    for sample in samples:
        violations = validate_sample(sample)
        if violations:
            raise ValidationError(
                f"sample {sample.sample_id!r} fails validation; refusing to save", violations
            )
    ids = [s.sample_id for s in samples]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate sample ids in dataset")

    root = Path(path)
    (root / "samples").mkdir(parents=True, exist_ok=True)
    (root / "images").mkdir(parents=True, exist_ok=True)
    for sample in samples:
        record = {
            "sample_id": sample.sample_id,
            "image": f"images/{sample.sample_id}.png",
            "depth_order": list(sample.depth_order),
            "objects": {oid: _target_record(t) for oid, t in sorted(sample.objects.items())},
            "conversations": [
                {"question": c.question, "answer": c.answer, "target_ids": list(c.target_ids)}
                for c in sample.conversations
            ],
        }
        _dump_json(record, root / "samples" / f"{sample.sample_id}.json")
        _image_to_png(sample.image, root / "images" / f"{sample.sample_id}.png")
    manifest = {
        "format_version": FORMAT_VERSION,
        "schema": SCHEMA,
        "samples": ids,
        "meta": meta or {},
    }
    _dump_json(manifest, root / "manifest.json")
    return root


def _parse_sample(record: dict, image: np.ndarray) -> SceneSample:
    objects = {}
    for oid, rec in record["objects"].items():
        visible = decode_mask(rec["visible_rle"])
        amodal = decode_mask(rec["amodal_rle"])
        objects[oid] = SegTarget.from_masks(visible, amodal, rec["category"])
        stored = rec.get("occlusion_rate")
        if stored is None or abs(stored - objects[oid].occlusion_rate) > 1e-9:
            raise DatasetFormatError(
                f"object {oid!r}: stored occlusion rate {stored!r} disagrees with its masks"
            )
    conversations = tuple(
        Conversation(c["question"], c["answer"], tuple(c["target_ids"]))
        for c in record.get("conversations", [])
    )
    return SceneSample(
        sample_id=record["sample_id"],
        image=image,
        objects=objects,
        conversations=conversations,
        depth_order=tuple(record.get("depth_order", sorted(objects))),
    )


def load_dataset(path) -> list[SceneSample]:
    """Load and validate a dataset directory; raises instead of returning bad samples."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise DatasetFormatError(f"no manifest.json under {root}")
    manifest = _load_json(manifest_path)
    if manifest.get("schema") != SCHEMA:
        raise DatasetFormatError(f"unsupported schema {manifest.get('schema')!r}")
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported format version {manifest.get('format_version')!r}")

    samples = []
    for sid in manifest["samples"]:
        record_path = root / "samples" / f"{sid}.json"
        if not record_path.exists():
            raise DatasetFormatError(f"missing sample record {record_path.name}")
        record = _load_json(record_path)
        image_path = root / record["image"]
        if not image_path.exists():
            raise DatasetFormatError(f"missing image {record['image']}")
        try:
            sample = _parse_sample(record, _png_to_image(image_path))
        except (KeyError, TypeError) as exc:
            raise DatasetFormatError(f"malformed sample record {record_path.name}: {exc}") from exc
        violations = validate_sample(sample)
        if violations:
            raise ValidationError(f"sample {sid!r} fails validation on load", violations)
        samples.append(sample)
    return samples


def load_manifest(path) -> dict:
    return _load_json(Path(path) / "manifest.json")
