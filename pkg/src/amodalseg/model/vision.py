"""Visual feature extraction and embedding-conditioned mask decoding."""
from __future__ import annotations

import math

import torch
import torch.nn as nn

from ..errors import ShapeError

SIM_HEADS = 4  # correlation channels between the projected embedding and features


class ImageEncoder(nn.Module):
    """Strided conv stack: HxWx3 -> (H/s)x(W/s)xC feature grid."""

    def __init__(self, channels: int, stride: int):
        super().__init__()
        steps = int(math.log2(stride))
        layers: list[nn.Module] = []
        c_in = 3
        for i in range(steps):
            c_out = max(channels // 2, 8) if i < steps - 1 else channels
            layers += [nn.Conv2d(c_in, c_out, 3, stride=2, padding=1), nn.ReLU()]
            c_in = c_out
        layers += [nn.Conv2d(c_in, channels, 3, padding=1)]
        self.net = nn.Sequential(*layers)
        self.stride = stride

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        """image: (3, H, W) -> features (C, H/s, W/s)."""
        if image.dim() != 3 or image.shape[0] != 3:
            raise ShapeError(f"expected image (3, H, W), got {tuple(image.shape)}")
        return self.net(image.unsqueeze(0)).squeeze(0)


class MaskDecoder(nn.Module):
    """Correlates a projected [SEG] embedding with the feature grid, then
    refines and upsamples the correlation maps to full-resolution logits."""

    def __init__(self, feature_channels: int, embed_dim: int, stride: int):
        super().__init__()
        self.feature_channels = feature_channels
        self.query_proj = nn.Linear(embed_dim, SIM_HEADS * feature_channels)
        c = feature_channels + SIM_HEADS
        self.refine = nn.Sequential(
            nn.Conv2d(c, 40, 3, padding=1), nn.ReLU(),
            nn.Conv2d(40, 32, 3, padding=1), nn.ReLU(),
        )
        ups: list[nn.Module] = []
        c_in = 32
        for _ in range(int(math.log2(stride))):
            c_out = max(c_in // 2, 8)
            ups += [nn.Upsample(scale_factor=2, mode="nearest"),
                    nn.Conv2d(c_in, c_out, 3, padding=1), nn.ReLU()]
            c_in = c_out
        ups += [nn.Conv2d(c_in, 1, 1)]
        self.upsample = nn.Sequential(*ups)

    def forward(self, features: torch.Tensor, embeddings: torch.Tensor) -> torch.Tensor:
        """features: (C, h, w); embeddings: (K, d) -> logits (K, H, W)."""
        if features.shape[0] != self.feature_channels:
            raise ShapeError(
                f"features have {features.shape[0]} channels, decoder expects {self.feature_channels}"
            )
        k = embeddings.shape[0]
        queries = self.query_proj(embeddings).view(k, SIM_HEADS, self.feature_channels)
        sim = torch.einsum("ksc,chw->kshw", queries, features) / math.sqrt(self.feature_channels)
        feats = features.unsqueeze(0).expand(k, *features.shape)
        x = torch.cat([sim, feats], dim=1)
        x = self.refine(x)
        return self.upsample(x).squeeze(1)


class SpatialOcclusionEncoder(nn.Module):
    """Consumes visible/amodal mask probabilities and predicts the 3-class
    occlusion-aware spatial map. Gradients flow back into both decoders."""

    def __init__(self, hidden: int = 16):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(2, hidden, 3, padding=1), nn.ReLU(),
            nn.Conv2d(hidden, hidden, 3, padding=1), nn.ReLU(),
            nn.Conv2d(hidden, 3, 1),
        )

    def forward(self, visible_logits: torch.Tensor, amodal_logits: torch.Tensor) -> torch.Tensor:
        """(K, H, W) logits each -> (K, 3, H, W) spatial-map logits."""
        if visible_logits.shape != amodal_logits.shape:
            raise ShapeError(
                f"visible {tuple(visible_logits.shape)} vs amodal {tuple(amodal_logits.shape)}"
            )
        probs = torch.stack([torch.sigmoid(visible_logits), torch.sigmoid(amodal_logits)], dim=1)
        return self.net(probs)
