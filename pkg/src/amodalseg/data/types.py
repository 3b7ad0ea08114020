"""Core sample types and exact mask geometry.

Masks are 2D boolean numpy arrays. A scene sample owns an image, a set of
segmentation targets (one per object), the reasoning conversations, and the
front-to-back depth order. All instances are frozen after construction and
safe to share across workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GeometryError, ShapeError

SEG_TOKEN = "[SEG]"

# Spatial-map pixel classes.
SP_BACKGROUND = 0
SP_VISIBLE = 1
SP_OCCLUDED = 2

Box = tuple[int, int, int, int]  # (x0, y0, x1, y1), half-open, x = column


def as_mask(values) -> np.ndarray:
    arr = np.asarray(values, dtype=bool)
    if arr.ndim != 2:
        raise ShapeError(f"mask must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"mask must be at least 1x1, got shape {arr.shape}")
    return arr


def mask_area(mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask))


def tight_box(mask: np.ndarray) -> Box | None:
    """Tight half-open bounding box of a mask, or None for an empty mask."""
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    return (int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)


def _check_pair(visible: np.ndarray, amodal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    visible = as_mask(visible)
    amodal = as_mask(amodal)
    if visible.shape != amodal.shape:
        raise ShapeError(
            f"visible shape {visible.shape} does not match amodal shape {amodal.shape}"
        )
    leak = int(np.count_nonzero(visible & ~amodal))
    if leak:
        raise GeometryError(f"visible mask has {leak} pixel(s) outside the amodal mask")
    return visible, amodal


def compute_occlusion_rate(visible: np.ndarray, amodal: np.ndarray) -> float:
    """Fraction of the amodal mask hidden from view: 1 - |visible| / |amodal|.

    Requires visible to be a subset of amodal and a nonempty amodal mask.
    """
    visible, amodal = _check_pair(visible, amodal)
    amodal_area = mask_area(amodal)
    if amodal_area == 0:
        raise GeometryError("amodal mask is empty (0 pixels); occlusion rate undefined")
    return 1.0 - mask_area(visible) / amodal_area


def build_spatial_map(visible: np.ndarray, amodal: np.ndarray) -> np.ndarray:
    """Per-pixel 3-way map: 1 on the visible mask, 2 on amodal-minus-visible, 0 elsewhere."""
    visible, amodal = _check_pair(visible, amodal)
    out = np.zeros(visible.shape, dtype=np.uint8)
    out[amodal] = SP_OCCLUDED
    out[visible] = SP_VISIBLE
    return out


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SegTarget:
    """One object's ground truth: masks, occlusion rate, spatial map, boxes."""

    visible_mask: np.ndarray
    amodal_mask: np.ndarray
    occlusion_rate: float
    spatial_map: np.ndarray
    category: str
    visible_box: Box | None
    amodal_box: Box | None

    @classmethod
    def from_masks(cls, visible, amodal, category: str) -> "SegTarget":
        """Build a target from a mask pair, deriving rate, map, and boxes."""
        visible, amodal = _check_pair(visible, amodal)
        rate = compute_occlusion_rate(visible, amodal)
        return cls(
            visible_mask=_freeze(visible),
            amodal_mask=_freeze(amodal),
            occlusion_rate=rate,
            spatial_map=_freeze(build_spatial_map(visible, amodal)),
            category=category,
            visible_box=tight_box(visible),
            amodal_box=tight_box(amodal),
        )


@dataclass(frozen=True)
class Conversation:
    """A question and an answer whose [SEG] occurrences reference targets in order."""

    question: str
    answer: str
    target_ids: tuple[str, ...]

    def seg_count(self) -> int:
        return self.answer.count(SEG_TOKEN)


@dataclass(frozen=True, eq=False)
class SceneSample:
    """An image plus per-object targets, conversations, and depth order (front first)."""

    sample_id: str
    image: np.ndarray  # HxWx3 float32 in [0, 1]
    objects: dict[str, SegTarget]
    conversations: tuple[Conversation, ...] = field(default_factory=tuple)
    depth_order: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "image", _freeze(np.asarray(self.image, dtype=np.float32)))
        object.__setattr__(self, "conversations", tuple(self.conversations))
        object.__setattr__(self, "depth_order", tuple(self.depth_order))

    @property
    def image_size(self) -> tuple[int, int]:
        return (int(self.image.shape[0]), int(self.image.shape[1]))


def occlusion_pairs(sample: SceneSample) -> list[tuple[str, str]]:
    """(occluder, occludee) pairs: occluder's visible pixels cover part of occludee's shape."""
    pairs = []
    ids = list(sample.depth_order) if sample.depth_order else sorted(sample.objects)
    for occluder in ids:
        vis = sample.objects[occluder].visible_mask
        for occludee in ids:
            if occluder == occludee:
                continue
            if np.any(vis & sample.objects[occludee].amodal_mask):
                pairs.append((occluder, occludee))
    return pairs


def targets_equal(a: SegTarget, b: SegTarget) -> bool:
    return (
        np.array_equal(a.visible_mask, b.visible_mask)
        and np.array_equal(a.amodal_mask, b.amodal_mask)
        and a.occlusion_rate == b.occlusion_rate
        and np.array_equal(a.spatial_map, b.spatial_map)
        and a.category == b.category
        and a.visible_box == b.visible_box
        and a.amodal_box == b.amodal_box
    )


def samples_equal(a: SceneSample, b: SceneSample) -> bool:
    """Field-by-field equality, masks and image bit-exact."""
    if a.sample_id != b.sample_id or a.depth_order != b.depth_order:
        return False
    if a.conversations != b.conversations:
        return False
    if not np.array_equal(a.image, b.image):
        return False
    if set(a.objects) != set(b.objects):
        return False
    return all(targets_equal(a.objects[k], b.objects[k]) for k in a.objects)
