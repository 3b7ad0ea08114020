"""Training objectives: token cross-entropy, mask BCE + Dice, occlusion terms.

All functions take logits and return scalar tensors, so they sit directly on
the autograd path. Reductions are means (over non-pad tokens, pixels, and
[SEG] slots) to keep magnitudes comparable across answer lengths and target
counts.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import torch
import torch.nn.functional as F

from .errors import ConfigurationError, ShapeError, UndefinedLossError

DICE_EPS = 1e-6

LOSS_NAMES = (
    "l_text",
    "l_mask_ce_v",
    "l_mask_ce_a",
    "l_dice_v",
    "l_dice_a",
    "l_occ_rate",
    "l_occ_spatial",
)

DEFAULT_WEIGHTS = {name: 1.0 for name in LOSS_NAMES}


@dataclass
class LossBreakdown:
    l_text: torch.Tensor | None = None
    l_mask_ce_v: torch.Tensor | None = None
    l_mask_ce_a: torch.Tensor | None = None
    l_dice_v: torch.Tensor | None = None
    l_dice_a: torch.Tensor | None = None
    l_occ_rate: torch.Tensor | None = None
    l_occ_spatial: torch.Tensor | None = None
    total: torch.Tensor | None = None

    def to_floats(self) -> dict[str, float | None]:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = float(value.detach()) if value is not None else None
        return out


def text_loss(token_logits: torch.Tensor, target_tokens: torch.Tensor, pad_id: int) -> torch.Tensor:
    """Mean token-level cross-entropy over non-pad positions."""
    if token_logits.shape[0] != target_tokens.shape[0]:
        raise ShapeError(
            f"{token_logits.shape[0]} logit rows vs {target_tokens.shape[0]} targets"
        )
    keep = target_tokens != pad_id
    if not bool(keep.any()):
        raise UndefinedLossError("text loss undefined on an all-pad target")
    return F.cross_entropy(token_logits[keep], target_tokens[keep])


def dice_loss(mask_logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Soft Dice: 1 - (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps), p = sigmoid(logits).

    Accepts (H, W) or (K, H, W); leading dims are averaged.
    """
    if mask_logits.shape != target.shape:
        raise ShapeError(f"logits {tuple(mask_logits.shape)} vs target {tuple(target.shape)}")
    p = torch.sigmoid(mask_logits)
    g = target.to(p.dtype)
    dims = (-2, -1)
    num = 2.0 * (p * g).sum(dim=dims) + DICE_EPS
    den = p.sum(dim=dims) + g.sum(dim=dims) + DICE_EPS
    return (1.0 - num / den).mean()


def mask_bce(mask_logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Per-pixel binary cross-entropy with logits, mean over all pixels."""
    if mask_logits.shape != target.shape:
        raise ShapeError(f"logits {tuple(mask_logits.shape)} vs target {tuple(target.shape)}")
    return F.binary_cross_entropy_with_logits(mask_logits, target.to(mask_logits.dtype))


def mask_loss(visible_logits, amodal_logits, visible_target, amodal_target) -> dict[str, torch.Tensor]:
    """BCE + Dice on both the visible and the amodal mask, unit weights."""
    return {
        "l_mask_ce_v": mask_bce(visible_logits, visible_target),
        "l_mask_ce_a": mask_bce(amodal_logits, amodal_target),
        "l_dice_v": dice_loss(visible_logits, visible_target),
        "l_dice_a": dice_loss(amodal_logits, amodal_target),
    }


def occ_loss(r_hat: torch.Tensor, r: torch.Tensor, spatial_logits: torch.Tensor,
             spatial_target: torch.Tensor) -> dict[str, torch.Tensor]:
    """Squared error on the occlusion rate plus 3-class per-pixel cross-entropy.

    spatial_logits: (K, 3, H, W); spatial_target: (K, H, W) integer classes.
    """
    if r_hat.shape != r.shape:
        raise ShapeError(f"rate shapes differ: {tuple(r_hat.shape)} vs {tuple(r.shape)}")
    if spatial_logits.dim() != 4 or spatial_logits.shape[1] != 3:
        raise ShapeError(f"spatial logits must be (K, 3, H, W), got {tuple(spatial_logits.shape)}")
    if spatial_logits.shape[0] != spatial_target.shape[0] or spatial_logits.shape[2:] != spatial_target.shape[1:]:
        raise ShapeError(
            f"spatial logits {tuple(spatial_logits.shape)} vs target {tuple(spatial_target.shape)}"
        )
    rate = ((r_hat - r.to(r_hat.dtype)) ** 2).mean()
    spatial = F.cross_entropy(spatial_logits, spatial_target.long())
    return {"l_occ_rate": rate, "l_occ_spatial": spatial}


def total_loss(components: dict[str, torch.Tensor], weights: dict[str, float] | None = None) -> torch.Tensor:
    """Weighted sum; absent components contribute nothing, defaults are unit weights."""
    weights = dict(DEFAULT_WEIGHTS, **(weights or {}))
    unknown = set(weights) - set(LOSS_NAMES)
    if unknown:
        raise ConfigurationError(f"unknown loss weight name(s): {sorted(unknown)}")
    for name, w in weights.items():
        if w < 0:
            raise ConfigurationError(f"loss weight {name} must be non-negative, got {w}")
    total = None
    for name in LOSS_NAMES:
        value = components.get(name)
        if value is None:
            continue
        term = weights[name] * value
        total = term if total is None else total + term
    if total is None:
        raise UndefinedLossError("no loss components present")
    return total
