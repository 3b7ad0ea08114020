import numpy as np
import pytest

from amodalseg.errors import ShapeError, UndefinedMetricError
from amodalseg.evaluation.metrics import ciou, giou, iou, match_predictions, pair_scores
from amodalseg.evaluation.runner import (
    ConversationPrediction,
    GroundTruthOracle,
    SegPrediction,
    evaluate_model,
)

from conftest import make_sample


def square(h, w, r0, c0, r1, c1):
    m = np.zeros((h, w), bool)
    m[r0:r1, c0:c1] = True
    return m


@pytest.fixture
def fixture_pairs():
    """IoUs 1.0 and 1/9: identical 4-px masks, then 1px inside a 9px mask."""
    a = square(6, 6, 0, 0, 2, 2)
    pred_small = square(6, 6, 1, 1, 2, 2)
    gt_big = square(6, 6, 0, 0, 3, 3)
    return [(a, a), (pred_small, gt_big)]


class TestIoU:
    def test_identical_nonempty(self):
        m = square(4, 4, 1, 1, 3, 3)
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        assert iou(square(4, 4, 0, 0, 1, 1), square(4, 4, 2, 2, 3, 3)) == 0.0

    def test_one_pixel_inside_three_by_three(self):
        assert iou(square(6, 6, 1, 1, 2, 2), square(6, 6, 0, 0, 3, 3)) == pytest.approx(1 / 9, abs=1e-12)

    def test_both_empty_is_one(self):
        z = np.zeros((3, 3), bool)
        assert iou(z, z) == 1.0

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            a = rng.random((5, 5)) > 0.5
            b = rng.random((5, 5)) > 0.5
            assert iou(a, b) == iou(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            iou(np.zeros((2, 2), bool), np.zeros((3, 3), bool))


class TestAggregates:
    def test_giou_hand_average(self, fixture_pairs):
        assert giou(fixture_pairs) == pytest.approx(5 / 9, abs=1e-12)

    def test_ciou_hand_sums(self, fixture_pairs):
        # intersections 4 + 1 = 5, unions 4 + 9 = 13
        assert ciou(fixture_pairs) == pytest.approx(5 / 13, abs=1e-12)

    def test_giou_differs_from_ciou_on_fixture(self, fixture_pairs):
        assert abs(giou(fixture_pairs) - ciou(fixture_pairs)) > 1e-3

    def test_single_pair_equals_iou(self, fixture_pairs):
        assert giou(fixture_pairs[1:]) == iou(*fixture_pairs[1])
        assert ciou(fixture_pairs[1:]) == iou(*fixture_pairs[1])

    def test_all_identical_pairs(self):
        m = square(4, 4, 0, 0, 2, 2)
        assert giou([(m, m)] * 3) == 1.0
        assert ciou([(m, m)] * 3) == 1.0

    def test_empty_list_undefined(self):
        with pytest.raises(UndefinedMetricError):
            giou([])
        with pytest.raises(UndefinedMetricError):
            ciou([])

    def test_all_empty_unions_undefined(self):
        z = np.zeros((2, 2), bool)
        with pytest.raises(UndefinedMetricError):
            ciou([(z, z)])

    def test_ciou_bounded_by_pairwise_ious(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            pairs = []
            for _ in range(4):
                a = rng.random((6, 6)) > 0.4
                b = rng.random((6, 6)) > 0.4
                if not (a | b).any():
                    a[0, 0] = True
                pairs.append((a, b))
            ious = [iou(a, b) for a, b in pairs]
            assert min(ious) - 1e-12 <= ciou(pairs) <= max(ious) + 1e-12
            assert min(ious) - 1e-12 <= giou(pairs) <= max(ious) + 1e-12

    def test_giou_equals_ciou_for_equal_union_sizes(self):
        # two pairs, both with union 4: IoUs 1.0 and 0.0
        a = square(4, 4, 0, 0, 2, 2)
        b = square(4, 4, 2, 2, 3, 4)  # 2 px
        c = square(4, 4, 0, 0, 1, 2)  # 2 px, disjoint from b
        pairs = [(a, a), (b, c)]
        assert giou(pairs) == pytest.approx(ciou(pairs), abs=1e-12)


class TestMatching:
    def test_equal_counts(self):
        pairs, surplus = match_predictions(["p0", "p1"], ["g0", "g1"])
        assert [(p.prediction, p.target) for p in pairs] == [("p0", "g0"), ("p1", "g1")]
        assert surplus == 0

    def test_no_predictions_two_targets(self):
        pairs, surplus = match_predictions([], ["g0", "g1"])
        assert [p.prediction for p in pairs] == [None, None]
        assert surplus == 0

    def test_surplus_recorded_unscored(self):
        pairs, surplus = match_predictions(["p0", "p1", "p2"], ["g0", "g1"])
        assert len(pairs) == 2
        assert surplus == 1

    def test_deterministic_and_order_stable(self):
        a = match_predictions(["x", "y"], ["g0", "g1"])
        b = match_predictions(["x", "y"], ["g0", "g1"])
        assert a == b

    def test_unmatched_scores_zero_and_counts_gt_union(self):
        gt = square(4, 4, 0, 0, 2, 2)
        s, inter, union = pair_scores(None, gt)
        assert s == 0.0 and inter == 0 and union == 4


class TestEvaluateModel:
    def test_oracle_scores_perfectly(self, sample):
        report = evaluate_model(GroundTruthOracle(), [sample])
        assert report.amodal_giou == 1.0
        assert report.amodal_ciou == 1.0
        assert report.visible_giou == 1.0
        assert report.visible_ciou == 1.0
        assert report.rate_mae == 0.0
        assert report.spatial_accuracy == 1.0
        assert report.unmatched_targets == 0

    def test_silent_model_scores_zero_with_unmatched(self, sample):
        class Silent:
            def predict(self, sample, conversation):
                return ConversationPrediction(answer_tokens=[], segs=[])

        report = evaluate_model(Silent(), [sample])
        assert report.amodal_giou == 0.0
        assert report.amodal_ciou == 0.0
        assert report.unmatched_targets == 2

    def test_pred_zero_gt_two_yields_two_zero_iou_matches(self, sample):
        class Silent:
            def predict(self, sample, conversation):
                return ConversationPrediction(answer_tokens=[], segs=[])

        report = evaluate_model(Silent(), [sample])
        # one conversation with two targets -> two scored pairs, both zero
        assert report.unmatched_targets == 2
        assert report.amodal_giou == 0.0

    @pytest.mark.parametrize("k", [0, 1, 2, 3, 5])
    def test_matched_pair_multiplicity(self, k):
        sample = make_sample()
        from amodalseg.data.types import Conversation, SceneSample

        conv = Conversation(
            question="q?",
            answer="x[SEG] " * k if k else "none",
            target_ids=tuple(["red-rectangle", "blue-rectangle"] * 3)[:k] or ("red-rectangle",),
        )
        # k = 0 is not a valid stored conversation; emulate via predictions only
        counted = {"pairs": 0}

        class CountingOracle(GroundTruthOracle):
            def predict(self, sample, conversation):
                pred = super().predict(sample, conversation)
                pred.segs = pred.segs[:k]
                return pred

        mutated = SceneSample(
            sample_id=sample.sample_id, image=sample.image, objects=sample.objects,
            conversations=(conv,), depth_order=sample.depth_order,
        )
        report = evaluate_model(CountingOracle(), [mutated])
        expected_targets = len(conv.target_ids)
        assert report.unmatched_targets == max(expected_targets - k, 0)
        assert report.surplus_predictions == max(k - expected_targets, 0)
        del counted

    def test_rate_mae_reflects_errors(self, sample):
        class OffByTenth(GroundTruthOracle):
            def predict(self, sample, conversation):
                pred = super().predict(sample, conversation)
                for seg in pred.segs:
                    seg.rate = min(seg.rate + 0.1, 1.0)
                return pred

        report = evaluate_model(OffByTenth(), [sample])
        assert report.rate_mae == pytest.approx(0.1, abs=1e-6)
