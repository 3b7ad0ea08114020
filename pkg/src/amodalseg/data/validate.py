"""Invariant checks for scene samples. Violations are data, not exceptions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import SEG_TOKEN, SceneSample, build_spatial_map, mask_area, tight_box

RATE_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    object_id: str | None = None
    conversation_index: int | None = None


def validate_sample(sample: SceneSample) -> list[Violation]:
    """Check every documented invariant; returns an empty list for a valid sample."""
    out: list[Violation] = []

    img = sample.image
    if img.ndim != 3 or img.shape[2] != 3:
        out.append(Violation("image-shape", f"image must be HxWx3, got {img.shape}"))
        return out
    h, w = img.shape[:2]
    if img.size and (float(img.min()) < 0.0 or float(img.max()) > 1.0):
        out.append(Violation("image-range", "image values must lie in [0, 1]"))

    for oid, tgt in sample.objects.items():
        vis, amo = tgt.visible_mask, tgt.amodal_mask
        if vis.shape != (h, w) or amo.shape != (h, w):
            out.append(
                Violation(
                    "mask-shape",
                    f"object {oid!r} masks {vis.shape}/{amo.shape} do not match image {h}x{w}",
                    object_id=oid,
                )
            )
            continue
        if mask_area(amo) == 0:
            out.append(Violation("empty-amodal", f"object {oid!r} has an empty amodal mask", oid))
            continue
        leak = int(np.count_nonzero(vis & ~amo))
        if leak:
            out.append(
                Violation(
                    "visible-outside-amodal",
                    f"object {oid!r} has {leak} visible pixel(s) outside its amodal mask",
                    oid,
                )
            )
            continue
        expect_rate = 1.0 - mask_area(vis) / mask_area(amo)
        if abs(tgt.occlusion_rate - expect_rate) > RATE_TOL:
            out.append(
                Violation(
                    "occlusion-rate",
                    f"object {oid!r} stores rate {tgt.occlusion_rate!r}, expected {expect_rate!r}",
                    oid,
                )
            )
        if not np.array_equal(tgt.spatial_map, build_spatial_map(vis, amo)):
            out.append(
                Violation("spatial-map", f"object {oid!r} spatial map disagrees with its masks", oid)
            )
        if tgt.visible_box != tight_box(vis):
            out.append(Violation("visible-box", f"object {oid!r} visible box is not tight", oid))
        if tgt.amodal_box != tight_box(amo):
            out.append(Violation("amodal-box", f"object {oid!r} amodal box is not tight", oid))

    ids = sorted(sample.objects)
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if sample.objects[a].visible_mask.shape != (h, w):
                continue
            if sample.objects[b].visible_mask.shape != (h, w):
                continue
            overlap = int(
                np.count_nonzero(sample.objects[a].visible_mask & sample.objects[b].visible_mask)
            )
            if overlap:
                out.append(
                    Violation(
                        "visible-overlap",
                        f"objects {a!r} and {b!r} share {overlap} visible pixel(s)",
                    )
                )

    if sorted(sample.depth_order) != ids:
        out.append(
            Violation(
                "depth-order",
                "depth_order must list every object id exactly once",
            )
        )

    for ci, conv in enumerate(sample.conversations):
        k = conv.answer.count(SEG_TOKEN)
        if k != len(conv.target_ids):
            out.append(
                Violation(
                    "seg-count",
                    f"conversation {ci} has {k} {SEG_TOKEN} but {len(conv.target_ids)} target(s)",
                    conversation_index=ci,
                )
            )
        if len(conv.target_ids) < 1:
            out.append(
                Violation(
                    "no-targets", f"conversation {ci} references no targets", conversation_index=ci
                )
            )
        for tid in conv.target_ids:
            if tid not in sample.objects:
                out.append(
                    Violation(
                        "unknown-target",
                        f"conversation {ci} references unknown object {tid!r}",
                        conversation_index=ci,
                    )
                )
    return out
