"""Embedding heads: prompt refinement and the occlusion condition encoder."""
from __future__ import annotations

import torch
import torch.nn as nn


class PromptEncoder(nn.Module):
    """Width-preserving two-layer feed-forward refinement with a residual path."""

    def __init__(self, dim: int):
        super().__init__()
        self.fc1 = nn.Linear(dim, dim)
        self.fc2 = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.fc2(torch.relu(self.fc1(x)))


class OcclusionConditionEncoder(nn.Module):
    """Maps refined embeddings to occlusion-aware embeddings and predicts the
    occlusion rate with a linear layer followed by a sigmoid, both from e_r."""

    def __init__(self, dim: int):
        super().__init__()
        self.fc1 = nn.Linear(dim, dim)
        self.fc2 = nn.Linear(dim, dim)
        self.rate_head = nn.Linear(dim, 1)

    def forward(self, e_r: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        e_oa = self.fc2(torch.relu(self.fc1(e_r)))
        r_hat = torch.sigmoid(self.rate_head(e_r)).squeeze(-1)
        return e_oa, r_hat
