"""Prompt assembly for the question/answer generation service.

The assembled prompt asks for exactly ten QA pairs in a strict JSON envelope
so parsing is deterministic; guidelines require multi-object answers and
explicit use of the occlusion relations between objects.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import PromptAssemblyError
from .bundle import ObjectAnnotationBundle

REQUIRED_SECTIONS = ("task", "guidelines", "example", "output_format")

QA_PAIR_COUNT = 10


@dataclass(frozen=True)
class PromptTemplate:
    task: str
    guidelines: tuple[str, ...]
    example: str
    output_format: str

    def section(self, name: str) -> str:
        value = getattr(self, name, None)
        if name == "guidelines":
            value = "\n".join(f"- {g}" for g in self.guidelines) if self.guidelines else ""
        if not value:
            raise PromptAssemblyError(f"prompt template is missing required section {name!r}")
        return value


DEFAULT_TEMPLATE = PromptTemplate(
    task=(
        "You are given an image and the annotation of every object in it. "
        "Write implicit reasoning questions about the scene together with "
        "answers that reference objects for segmentation."
    ),
    guidelines=(
        f"Produce exactly {QA_PAIR_COUNT} question-and-answer pairs.",
        "Questions must be implicit: never name the object directly.",
        "Organize several different objects inside one answer where natural.",
        "Use the occlusion relations between objects: say what hides what and how much.",
        "After each object mention in an answer, append the literal marker [SEG].",
        "Answers must be helpful, specific to this image, and self-contained.",
    ),
    example=(
        'Question: "What should I move to reach the item behind it?" '
        'Answer: "Move the mug[SEG] aside to reach the plate[SEG] hidden behind it." '
        'Targets: ["obj1", "obj0"].'
    ),
    output_format=(
        "Return ONLY a JSON array of exactly "
        f"{QA_PAIR_COUNT} items, each an object with keys "
        '"question" (string), "answer" (string containing one [SEG] per referenced '
        'object, in order), and "targets" (array of object ids aligned with the '
        "[SEG] markers). No prose outside the JSON."
    ),
)


def _object_lines(bundle: ObjectAnnotationBundle) -> str:
    entries = []
    for oid in sorted(bundle.objects):
        info = bundle.objects[oid]
        entries.append(
            {
                "id": info.object_id,
                "category": info.category,
                "visible_box": list(info.visible_box) if info.visible_box else None,
                "amodal_box": list(info.amodal_box) if info.amodal_box else None,
                "occlusion_rate": round(info.occlusion_rate, 4),
            }
        )
    return json.dumps(entries, sort_keys=True)


def _relation_lines(bundle: ObjectAnnotationBundle) -> str:
    if not bundle.relations:
        return "No object occludes another in this image."
    lines = []
    for occluder, occludee in bundle.relations:
        rate = bundle.objects[occludee].occlusion_rate
        lines.append(
            f"{occluder} occludes {occludee} "
            f"({rate:.0%} of {occludee} is hidden overall)."
        )
    return "\n".join(lines)


def assemble_prompt(bundle: ObjectAnnotationBundle, template: PromptTemplate = DEFAULT_TEMPLATE) -> str:
    """Deterministic prompt text; raises when the bundle has no objects or the
    template lacks a required section."""
    if not bundle.objects:
        raise PromptAssemblyError(f"bundle {bundle.sample_id!r} has no objects")
    sections = {name: template.section(name) for name in REQUIRED_SECTIONS}
    h, w = bundle.image_size
    return "\n\n".join(
        [
            f"TASK\n{sections['task']}",
            f"GUIDELINES\n{sections['guidelines']}",
            f"IMAGE\n{w}x{h} pixels, id {bundle.sample_id}",
            f"OBJECTS\n{_object_lines(bundle)}",
            f"OCCLUSION RELATIONS\n{_relation_lines(bundle)}",
            f"EXAMPLE\n{sections['example']}",
            f"OUTPUT FORMAT\n{sections['output_format']}",
        ]
    )
