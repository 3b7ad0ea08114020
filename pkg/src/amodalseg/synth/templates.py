"""Templated reasoning conversations over generated scenes.

Each template pairs a question with an answer pattern whose ``{role}[SEG]``
slots are filled from role bindings enumerated on the scene (occluder,
occludee, front-most, ...). Object descriptors come from the generator's
"<color>-<kind>" ids, so answers read "the red ellipse[SEG]".
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ConfigurationError
from ..data.types import Conversation, SceneSample, occlusion_pairs

Binding = dict[str, str]


def describe(object_id: str) -> str:
    return object_id.replace("-", " ")


def _occluded_ids(scene: SceneSample) -> list[str]:
    return [oid for oid in scene.depth_order if scene.objects[oid].occlusion_rate > 0.0]


def _pair_bindings(scene: SceneSample) -> list[Binding]:
    return [
        {"occluder": a, "occludee": b}
        for a, b in occlusion_pairs(scene)
        if scene.objects[b].occlusion_rate > 0.0
    ]


def _unoccluded_bindings(scene: SceneSample) -> list[Binding]:
    return [
        {"target": oid}
        for oid in scene.depth_order
        if scene.objects[oid].occlusion_rate == 0.0
    ]


def _frontmost_binding(scene: SceneSample) -> list[Binding]:
    return [{"target": scene.depth_order[0]}] if scene.depth_order else []


def _each_object(scene: SceneSample) -> list[Binding]:
    return [{"target": oid} for oid in scene.depth_order]


def _most_occluded(scene: SceneSample) -> list[Binding]:
    occluded = _occluded_ids(scene)
    if not occluded:
        return []
    rates = [scene.objects[oid].occlusion_rate for oid in occluded]
    top = max(rates)
    winners = [oid for oid, r in zip(occluded, rates) if r == top]
    if len(winners) != 1:
        return []
    return [{"target": winners[0]}]


@dataclass(frozen=True)
class QATemplate:
    """Question/answer pattern plus the role constraints that make it satisfiable."""

    name: str
    question: str
    answer: str
    seg_roles: tuple[str, ...]
    bind: Callable[[SceneSample], list[Binding]]

    def __post_init__(self):
        if self.answer.count("[SEG]") != len(self.seg_roles):
            raise ConfigurationError(
                f"template {self.name!r}: answer has {self.answer.count('[SEG]')} [SEG] "
                f"slots but {len(self.seg_roles)} seg roles"
            )

    def instantiate(self, scene: SceneSample, binding: Binding) -> Conversation:
        names = {role: describe(oid) for role, oid in binding.items()}
        return Conversation(
            question=self.question.format(**names),
            answer=self.answer.format(**names),
            target_ids=tuple(binding[role] for role in self.seg_roles),
        )


def default_templates() -> list[QATemplate]:
    return [
        QATemplate(
            name="identify-occludee",
            question="Which object is partially hidden from view?",
            answer="The {occludee}[SEG] is partially hidden behind the {occluder}[SEG].",
            seg_roles=("occludee", "occluder"),
            bind=_pair_bindings,
        ),
        QATemplate(
            name="identify-occluder",
            question="What is covering part of another object in this scene?",
            answer="The {occluder}[SEG] sits in front of the {occludee}[SEG] and covers part of it.",
            seg_roles=("occluder", "occludee"),
            bind=_pair_bindings,
        ),
        QATemplate(
            name="move-to-reveal",
            question="What should be moved so that the {occludee} becomes fully visible?",
            answer="Move the {occluder}[SEG] aside; the {occludee}[SEG] will then be fully visible.",
            seg_roles=("occluder", "occludee"),
            bind=_pair_bindings,
        ),
        QATemplate(
            name="list-objects",
            question="Identify every object in the scene, nearest first.",
            answer="",  # assembled dynamically below
            seg_roles=(),
            bind=lambda scene: [],
        ),
        QATemplate(
            name="fully-visible",
            question="Which object is completely unobstructed?",
            answer="The {target}[SEG] is fully visible with nothing in front of it.",
            seg_roles=("target",),
            bind=_unoccluded_bindings,
        ),
        QATemplate(
            name="front-most",
            question="Which object lies closest to the viewer?",
            answer="The {target}[SEG] is the nearest object in the scene.",
            seg_roles=("target",),
            bind=_frontmost_binding,
        ),
        QATemplate(
            name="locate-object",
            question="Where is the {target} in this image?",
            answer="It is here: the {target}[SEG].",
            seg_roles=("target",),
            bind=_each_object,
        ),
        QATemplate(
            name="most-occluded",
            question="Which object is hidden the most?",
            answer="The {target}[SEG] has the largest hidden portion of all objects.",
            seg_roles=("target",),
            bind=_most_occluded,
        ),
        QATemplate(
            name="reveal-after-removal",
            question="If the {occluder} were taken away, what would be fully revealed?",
            answer="Removing the {occluder}[SEG] would fully reveal the {occludee}[SEG].",
            seg_roles=("occluder", "occludee"),
            bind=_pair_bindings,
        ),
    ]


def _list_objects_conversation(scene: SceneSample) -> Conversation:
    parts = [f"the {describe(oid)}[SEG]" for oid in scene.depth_order]
    if len(parts) > 1:
        body = ", ".join(parts[:-1]) + " and " + parts[-1]
    else:
        body = parts[0]
    return Conversation(
        question="Identify every object in the scene, nearest first.",
        answer=f"The scene contains {body}.",
        target_ids=tuple(scene.depth_order),
    )


def lexicon() -> list[str]:
    """Every word the default templates can emit, over the full shape palette.

    Training vocabularies include this closure so validation scenes built from
    the same templates never hit an unknown token.
    """
    from string import Formatter

    from ..model.vocab import tokenize
    from .scenes import PALETTE
    from .shapes import SHAPE_KINDS

    all_descriptors = " ".join(f"{c} {k}" for c in PALETTE for k in SHAPE_KINDS)
    texts = [
        "Identify every object in the scene, nearest first.",
        f"The scene contains the {all_descriptors}[SEG], and the red ellipse[SEG].",
    ]
    for template in default_templates():
        for pattern in (template.question, template.answer):
            fields = {name for _, name, _, _ in Formatter().parse(pattern) if name}
            texts.append(pattern.format(**{name: all_descriptors for name in fields}))
    words: set[str] = set()
    for text in texts:
        words.update(tokenize(text))
    return sorted(words)


def generate_conversations(scene: SceneSample, templates: list[QATemplate], n: int,
                           seed: int) -> list[Conversation]:
    """Instantiate up to n distinct conversations; seeded selection order.

    Returns every satisfiable instantiation when fewer than n exist. An empty
    result means no template's role constraints were satisfiable.
    """
    candidates: list[Conversation] = []
    seen: set[tuple] = set()
    for template in templates:
        if template.name == "list-objects":
            if scene.depth_order:
                conv = _list_objects_conversation(scene)
                key = (conv.question, conv.answer)
                if key not in seen:
                    seen.add(key)
                    candidates.append(conv)
            continue
        for binding in template.bind(scene):
            conv = template.instantiate(scene, binding)
            key = (conv.question, conv.answer)
            if key not in seen:
                seen.add(key)
                candidates.append(conv)
    if not candidates:
        return []
    rng = np.random.default_rng([int(seed), 0x51ED])
    order = rng.permutation(len(candidates))
    return [candidates[i] for i in order[: min(n, len(candidates))]]
