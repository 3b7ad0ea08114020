"""Dataset-level evaluation: greedy generation per conversation, positional
matching, and the aggregated report."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..errors import UndefinedMetricError
from ..data.types import Conversation, SceneSample
from .metrics import match_predictions, pair_scores


@dataclass
class SegPrediction:
    """One [SEG]'s raw outputs; masks as logits, thresholded by the evaluator."""

    visible_logits: np.ndarray
    amodal_logits: np.ndarray
    rate: float | None = None
    spatial_logits: np.ndarray | None = None  # (3, H, W)


@dataclass
class ConversationPrediction:
    answer_tokens: list[str]
    segs: list[SegPrediction]
    truncated: bool = False


class Predictor(Protocol):
    def predict(self, sample: SceneSample, conversation: Conversation) -> ConversationPrediction: ...


@dataclass
class EvalReport:
    amodal_giou: float
    amodal_ciou: float
    visible_giou: float
    visible_ciou: float
    rate_mae: float | None
    spatial_accuracy: float | None
    sample_count: int
    conversation_count: int
    unmatched_targets: int
    surplus_predictions: int

    def to_dict(self) -> dict:
        return {
            "amodal_giou": self.amodal_giou,
            "amodal_ciou": self.amodal_ciou,
            "visible_giou": self.visible_giou,
            "visible_ciou": self.visible_ciou,
            "rate_mae": self.rate_mae,
            "spatial_accuracy": self.spatial_accuracy,
            "sample_count": self.sample_count,
            "conversation_count": self.conversation_count,
            "unmatched_targets": self.unmatched_targets,
            "surplus_predictions": self.surplus_predictions,
        }


class GroundTruthOracle:
    """Perfect predictor stub: emits the ground-truth answer and saturated
    ground-truth masks. Used to pin the evaluator's identity behavior."""

    def __init__(self, saturation: float = 50.0):
        self.saturation = saturation

    def predict(self, sample: SceneSample, conversation: Conversation) -> ConversationPrediction:
        segs = []
        for tid in conversation.target_ids:
            tgt = sample.objects[tid]
            vis = np.where(tgt.visible_mask, self.saturation, -self.saturation).astype(np.float32)
            amo = np.where(tgt.amodal_mask, self.saturation, -self.saturation).astype(np.float32)
            spatial = np.full((3,) + tgt.spatial_map.shape, -self.saturation, dtype=np.float32)
            for c in range(3):
                spatial[c][tgt.spatial_map == c] = self.saturation
            segs.append(
                SegPrediction(
                    visible_logits=vis,
                    amodal_logits=amo,
                    rate=float(tgt.occlusion_rate),
                    spatial_logits=spatial,
                )
            )
        return ConversationPrediction(answer_tokens=conversation.answer.split(), segs=segs)


def _threshold(logits: np.ndarray, threshold: float) -> np.ndarray:
    probs = 1.0 / (1.0 + np.exp(-np.asarray(logits, dtype=np.float64)))
    return probs > threshold


def evaluate_model(model: Predictor, dataset, threshold: float = 0.5) -> EvalReport:
    """Run greedy inference over every conversation and aggregate all metrics.

    gIoU averages per (conversation, target) pair; cIoU accumulates
    intersections and unions over the same pairs. Unmatched targets score 0,
    surplus predictions are counted but unscored.
    """
    vis_ious: list[float] = []
    amo_ious: list[float] = []
    vis_inter = vis_union = amo_inter = amo_union = 0
    rate_errors: list[float] = []
    spatial_correct = 0
    spatial_total = 0
    unmatched = 0
    surplus_total = 0
    conversation_count = 0
    sample_count = 0

    for sample in dataset:
        sample_count += 1
        for conv in sample.conversations:
            conversation_count += 1
            try:
                pred = model.predict(sample, conv)
            except Exception as exc:
                raise type(exc)(f"sample {sample.sample_id!r}: {exc}") from exc
            pairs, surplus = match_predictions(pred.segs, conv.target_ids)
            surplus_total += surplus
            for pair in pairs:
                tgt = sample.objects[pair.target]
                if pair.prediction is None:
                    unmatched += 1
                    pv = pa = None
                else:
                    pv = _threshold(pair.prediction.visible_logits, threshold)
                    pa = _threshold(pair.prediction.amodal_logits, threshold)
                    if pair.prediction.rate is not None:
                        rate_errors.append(abs(pair.prediction.rate - tgt.occlusion_rate))
                    if pair.prediction.spatial_logits is not None:
                        pred_map = np.argmax(pair.prediction.spatial_logits, axis=0)
                        spatial_correct += int(np.count_nonzero(pred_map == tgt.spatial_map))
                        spatial_total += tgt.spatial_map.size
                v_iou, v_i, v_u = pair_scores(pv, tgt.visible_mask)
                a_iou, a_i, a_u = pair_scores(pa, tgt.amodal_mask)
                vis_ious.append(v_iou)
                amo_ious.append(a_iou)
                vis_inter += v_i
                vis_union += v_u
                amo_inter += a_i
                amo_union += a_u

    if not amo_ious:
        raise UndefinedMetricError("no (prediction, target) pairs to evaluate")
    if amo_union == 0:
        raise UndefinedMetricError("cIoU undefined: every amodal union is empty")
    return EvalReport(
        amodal_giou=float(np.mean(amo_ious)),
        amodal_ciou=amo_inter / amo_union,
        visible_giou=float(np.mean(vis_ious)),
        visible_ciou=(vis_inter / vis_union) if vis_union else 1.0,
        rate_mae=float(np.mean(rate_errors)) if rate_errors else None,
        spatial_accuracy=(spatial_correct / spatial_total) if spatial_total else None,
        sample_count=sample_count,
        conversation_count=conversation_count,
        unmatched_targets=unmatched,
        surplus_predictions=surplus_total,
    )


@dataclass
class QualitativeExample:
    sample_id: str
    question: str
    answer_text: str
    image: np.ndarray
    gt_visible: list[np.ndarray] = field(default_factory=list)
    gt_amodal: list[np.ndarray] = field(default_factory=list)
    pred_visible: list[np.ndarray] = field(default_factory=list)
    pred_amodal: list[np.ndarray] = field(default_factory=list)


def collect_qualitative(model: Predictor, dataset, limit: int = 4,
                        threshold: float = 0.5) -> list[QualitativeExample]:
    """First few conversations with thresholded predictions, for figure rendering."""
    out: list[QualitativeExample] = []
    for sample in dataset:
        for conv in sample.conversations:
            if len(out) >= limit:
                return out
            pred = model.predict(sample, conv)
            example = QualitativeExample(
                sample_id=sample.sample_id,
                question=conv.question,
                answer_text=" ".join(pred.answer_tokens),
                image=sample.image,
            )
            for tid in conv.target_ids:
                example.gt_visible.append(sample.objects[tid].visible_mask)
                example.gt_amodal.append(sample.objects[tid].amodal_mask)
            for seg in pred.segs:
                example.pred_visible.append(_threshold(seg.visible_logits, threshold))
                example.pred_amodal.append(_threshold(seg.amodal_logits, threshold))
            out.append(example)
    return out
