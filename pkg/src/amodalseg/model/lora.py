"""Low-rank adapters on linear projections: y = Wx + b + (alpha/r) * B A x.

The base weight stays intact; freezing it and training only A/B mirrors
adapter-based fine-tuning of a frozen backbone. ``lora_A``/``lora_B`` names
are the contract used by freeze/inspection helpers.
"""
from __future__ import annotations

import torch
import torch.nn as nn


class LoRALinear(nn.Module):
    def __init__(self, in_features: int, out_features: int, rank: int = 0, alpha: float = 16.0):
        super().__init__()
        self.base = nn.Linear(in_features, out_features)
        self.rank = rank
        if rank > 0:
            self.scale = alpha / rank
            self.lora_A = nn.Parameter(torch.zeros(rank, in_features))
            self.lora_B = nn.Parameter(torch.zeros(out_features, rank))
        else:
            self.scale = 0.0

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.base(x)
        if self.rank > 0:
            y = y + self.scale * ((x @ self.lora_A.t()) @ self.lora_B.t())
        return y


def is_adapter_param(name: str) -> bool:
    return "lora_A" in name or "lora_B" in name


def freeze_base(module: nn.Module) -> None:
    """Freeze every non-adapter parameter of the module tree."""
    for name, param in module.named_parameters():
        param.requires_grad = is_adapter_param(name)
