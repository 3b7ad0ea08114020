from .metrics import MatchedPair, ciou, giou, iou, match_predictions, pair_scores
from .runner import (
    ConversationPrediction,
    EvalReport,
    GroundTruthOracle,
    QualitativeExample,
    SegPrediction,
    collect_qualitative,
    evaluate_model,
)
from .report import render_report, write_csv, write_report_bundle

__all__ = [
    "ConversationPrediction",
    "EvalReport",
    "GroundTruthOracle",
    "MatchedPair",
    "QualitativeExample",
    "SegPrediction",
    "ciou",
    "collect_qualitative",
    "evaluate_model",
    "giou",
    "iou",
    "match_predictions",
    "pair_scores",
    "render_report",
    "write_csv",
    "write_report_bundle",
]
