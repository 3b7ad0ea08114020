"""Per-image annotation bundles fed to the prompt assembler."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import ValidationError
from ..data.types import SceneSample, occlusion_pairs


@dataclass(frozen=True)
class ObjectInfo:
    object_id: str
    category: str
    visible_box: tuple | None
    amodal_box: tuple | None
    occlusion_rate: float


@dataclass(frozen=True)
class ObjectAnnotationBundle:
    sample_id: str
    image_size: tuple[int, int]
    objects: dict[str, ObjectInfo]
    relations: tuple[tuple[str, str], ...] = ()  # (occluder, occludee)

    def __post_init__(self):
        for occluder, occludee in self.relations:
            if occluder not in self.objects or occludee not in self.objects:
                raise ValidationError(
                    f"relation ({occluder!r}, {occludee!r}) references unknown object"
                )
        for info in self.objects.values():
            if not 0.0 <= info.occlusion_rate <= 1.0:
                raise ValidationError(
                    f"object {info.object_id!r} has occlusion rate {info.occlusion_rate}"
                )


def build_bundle(sample: SceneSample) -> ObjectAnnotationBundle:
    objects = {
        oid: ObjectInfo(
            object_id=oid,
            category=tgt.category,
            visible_box=tgt.visible_box,
            amodal_box=tgt.amodal_box,
            occlusion_rate=tgt.occlusion_rate,
        )
        for oid, tgt in sample.objects.items()
    }
    return ObjectAnnotationBundle(
        sample_id=sample.sample_id,
        image_size=sample.image_size,
        objects=objects,
        relations=tuple(occlusion_pairs(sample)),
    )
