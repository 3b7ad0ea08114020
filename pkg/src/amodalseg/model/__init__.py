from .config import ModelConfig
from .vocab import SEG, SPECIALS, Vocab, corpus_vocab, detokenize, tokenize
from .lora import LoRALinear, freeze_base, is_adapter_param
from .network import (
    AmodalReasoner,
    ModelOutputs,
    build_model,
    compute_losses,
    conversation_targets,
    extract_seg_embeddings,
    init_parameters,
)

__all__ = [
    "SEG",
    "SPECIALS",
    "AmodalReasoner",
    "LoRALinear",
    "ModelConfig",
    "ModelOutputs",
    "Vocab",
    "build_model",
    "compute_losses",
    "conversation_targets",
    "corpus_vocab",
    "detokenize",
    "extract_seg_embeddings",
    "freeze_base",
    "init_parameters",
    "is_adapter_param",
    "tokenize",
]
