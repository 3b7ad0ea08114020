"""Segmentation metrics: IoU, mean IoU over pairs (gIoU), cumulative IoU (cIoU),
and positional matching between predicted and ground-truth [SEG] outputs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError, UndefinedMetricError


def iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    pred = np.asarray(pred, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if pred.shape != gt.shape:
        raise ShapeError(f"pred {pred.shape} vs gt {gt.shape}")
    union = int(np.count_nonzero(pred | gt))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(pred & gt)) / union


def giou(pairs) -> float:
    """Arithmetic mean of per-pair IoUs."""
    pairs = list(pairs)
    if not pairs:
        raise UndefinedMetricError("gIoU undefined on an empty pair list")
    return float(np.mean([iou(p, g) for p, g in pairs]))


def ciou(pairs) -> float:
    """Cumulative intersection divided by cumulative union over all pairs."""
    pairs = list(pairs)
    if not pairs:
        raise UndefinedMetricError("cIoU undefined on an empty pair list")
    inter = 0
    union = 0
    for p, g in pairs:
        p = np.asarray(p, dtype=bool)
        g = np.asarray(g, dtype=bool)
        if p.shape != g.shape:
            raise ShapeError(f"pred {p.shape} vs gt {g.shape}")
        inter += int(np.count_nonzero(p & g))
        union += int(np.count_nonzero(p | g))
    if union == 0:
        raise UndefinedMetricError("cIoU undefined: every union is empty")
    return inter / union


@dataclass(frozen=True)
class MatchedPair:
    """One scored prediction/target pair. ``prediction`` is None for an
    unmatched target, which scores IoU 0 and adds |gt| to the cumulative union."""

    prediction: object | None
    target: object
    index: int


def match_predictions(predictions, targets) -> tuple[list[MatchedPair], int]:
    """Positional matching: i-th prediction to i-th target.

    Returns (pairs, surplus) where surplus counts predictions beyond the
    target count; surplus predictions are recorded but never scored.
    """
    predictions = list(predictions)
    targets = list(targets)
    pairs = [
        MatchedPair(predictions[i] if i < len(predictions) else None, tgt, i)
        for i, tgt in enumerate(targets)
    ]
    surplus = max(len(predictions) - len(targets), 0)
    return pairs, surplus


def pair_scores(pred_mask: np.ndarray | None, gt_mask: np.ndarray) -> tuple[float, int, int]:
    """(iou, intersection, union) with the unmatched-target rule applied."""
    gt_mask = np.asarray(gt_mask, dtype=bool)
    if pred_mask is None:
        return 0.0, 0, int(np.count_nonzero(gt_mask))
    pred_mask = np.asarray(pred_mask, dtype=bool)
    if pred_mask.shape != gt_mask.shape:
        raise ShapeError(f"pred {pred_mask.shape} vs gt {gt_mask.shape}")
    inter = int(np.count_nonzero(pred_mask & gt_mask))
    union = int(np.count_nonzero(pred_mask | gt_mask))
    return (1.0 if union == 0 else inter / union), inter, union
