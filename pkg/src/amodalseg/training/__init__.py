from .schedule import lr_at
from .checkpoint import load_checkpoint, save_checkpoint
from .loop import (
    EpochSampler,
    TrainConfig,
    TrainResult,
    build_vocab_for,
    load_model_from_checkpoint,
    train,
)

__all__ = [
    "EpochSampler",
    "TrainConfig",
    "TrainResult",
    "build_vocab_for",
    "load_checkpoint",
    "load_model_from_checkpoint",
    "lr_at",
    "save_checkpoint",
    "train",
]
