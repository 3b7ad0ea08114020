from .shapes import SHAPE_KINDS, ShapeSpec, raster
from .scenes import (
    PALETTE,
    SceneConfig,
    attach_conversations,
    build_dataset,
    compose_scene,
    generate_scene,
)
from .templates import QATemplate, default_templates, describe, generate_conversations

__all__ = [
    "PALETTE",
    "SHAPE_KINDS",
    "QATemplate",
    "SceneConfig",
    "ShapeSpec",
    "attach_conversations",
    "build_dataset",
    "compose_scene",
    "default_templates",
    "describe",
    "generate_conversations",
    "generate_scene",
    "raster",
]
