"""Adapter for COCOA-style amodal annotation files.

Expected annotation shape (one JSON file, schema documented in docs/formats.md
with a fixture at tests/fixtures/cocoa_fixture.json)::

    {
      "images": [{"id": ..., "file_name": ..., "height": H, "width": W}],
      "annotations": [
        {"image_id": ..., "category": "cup",
         "visible": <region>, "amodal": <region>}
      ],
      "depth_order": {"<image_id>": [annotation indices, front to back]}   # optional
    }

A region is either ``{"type": "rle", "size": [H, W], "counts": [...]}`` or
``{"type": "polygon", "points": [[[x, y], ...], ...]}`` (a list of rings,
rasterized with even-odd fill at integer pixel centers).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DatasetFormatError
from .rle import decode_mask
from .types import SceneSample, SegTarget
from .validate import validate_sample


@dataclass(frozen=True)
class AdapterIssue:
    level: str  # "warning" | "error"
    message: str
    image_id: str | None = None
    annotation_index: int | None = None


def _ring_contains(points: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Even-odd crossing test for one polygon ring, vectorized over pixel centers."""
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        if y1 == y2:
            continue
        crosses = (y1 > ys) != (y2 > ys)
        x_at = (x2 - x1) * (ys - y1) / (y2 - y1) + x1
        inside ^= crosses & (xs < x_at)
    return inside


def rasterize_polygon(rings, height: int, width: int) -> np.ndarray:
    """Even-odd fill of one or more rings, evaluated at pixel centers (col+0.5, row+0.5)."""
    ys, xs = np.mgrid[0:height, 0:width]
    xs = xs + 0.5
    ys = ys + 0.5
    mask = np.zeros((height, width), dtype=bool)
    for ring in rings:
        pts = np.asarray(ring, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise DatasetFormatError("polygon ring must be a list of >=3 [x, y] points")
        mask ^= _ring_contains(pts, xs, ys)
    return mask


def decode_region(region: dict, height: int, width: int) -> np.ndarray:
    kind = region.get("type")
    if kind == "rle":
        mask = decode_mask(region)
        if mask.shape != (height, width):
            raise DatasetFormatError(
                f"RLE region is {mask.shape}, image is {(height, width)}"
            )
        return mask
    if kind == "polygon":
        return rasterize_polygon(region.get("points", []), height, width)
    raise DatasetFormatError(f"unknown region type {kind!r}")


def load_cocoa_style(annotation_path, image_dir) -> tuple[list[SceneSample], list[AdapterIssue]]:
    """Convert a COCOA-style annotation file into validated scene samples.

    Missing images skip the sample with a warning; malformed regions skip the
    object with an error entry. Occlusion rates and spatial maps are derived
    from the decoded masks, never read from the file.
    """
    path = Path(annotation_path)
    image_dir = Path(image_dir)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"cannot parse {path.name}: {exc.msg}", byte_offset=exc.pos)

    from .io import _png_to_image  # shared PNG loader

    by_image: dict[str, list[tuple[int, dict]]] = {}
    for idx, ann in enumerate(doc.get("annotations", [])):
        by_image.setdefault(str(ann.get("image_id")), []).append((idx, ann))

    samples: list[SceneSample] = []
    issues: list[AdapterIssue] = []
    for info in doc.get("images", []):
        image_id = str(info["id"])
        height, width = int(info["height"]), int(info["width"])
        image_path = image_dir / info["file_name"]
        if not image_path.exists():
            issues.append(
                AdapterIssue("warning", f"missing image {info['file_name']}; sample skipped", image_id)
            )
            continue
        image = _png_to_image(image_path)
        if image.shape[:2] != (height, width):
            issues.append(
                AdapterIssue(
                    "error",
                    f"image {info['file_name']} is {image.shape[:2]}, annotations say {(height, width)}",
                    image_id,
                )
            )
            continue

        objects: dict[str, SegTarget] = {}
        index_to_oid: dict[int, str] = {}
        for idx, ann in by_image.get(image_id, []):
            oid = f"obj{idx}"
            try:
                visible = decode_region(ann["visible"], height, width)
                amodal = decode_region(ann["amodal"], height, width)
                objects[oid] = SegTarget.from_masks(visible, amodal, str(ann["category"]))
            except Exception as exc:  # malformed region: skip object, keep sample
                issues.append(AdapterIssue("error", str(exc), image_id, annotation_index=idx))
                continue
            index_to_oid[idx] = oid
        if not objects:
            issues.append(AdapterIssue("warning", "no decodable objects; sample skipped", image_id))
            continue

        order = doc.get("depth_order", {}).get(image_id)
        if order is not None:
            depth = tuple(index_to_oid[i] for i in order if i in index_to_oid)
            missing = [oid for oid in objects if oid not in depth]
            depth = depth + tuple(sorted(missing))
        else:
            # No explicit ordering: front-most objects are the least occluded.
            depth = tuple(
                sorted(objects, key=lambda oid: (objects[oid].occlusion_rate, oid))
            )

        sample = SceneSample(
            sample_id=image_id, image=image, objects=objects, conversations=(), depth_order=depth
        )
        violations = validate_sample(sample)
        if violations:
            issues.append(
                AdapterIssue(
                    "error",
                    "sample fails validation: " + "; ".join(v.message for v in violations),
                    image_id,
                )
            )
            continue
        samples.append(sample)
    return samples, issues
