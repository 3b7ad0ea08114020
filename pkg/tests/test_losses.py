import math

import numpy as np
import pytest
import torch

from amodalseg.errors import ConfigurationError, ShapeError, UndefinedLossError
from amodalseg.losses import (
    DEFAULT_WEIGHTS,
    dice_loss,
    mask_bce,
    mask_loss,
    occ_loss,
    text_loss,
    total_loss,
)


def numerical_grad(fn, x, eps=1e-6):
    """Central finite differences, elementwise, at double precision."""
    grad = torch.zeros_like(x)
    flat = x.view(-1)
    gflat = grad.view(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + eps
        hi = fn(x).item()
        flat[i] = orig - eps
        lo = fn(x).item()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * eps)
    return grad


def check_grad(fn, x, tol=1e-4):
    x = x.detach().clone().double().requires_grad_(True)
    fn(x).backward()
    auto = x.grad.detach().clone()
    num = numerical_grad(fn, x.detach().clone())
    denom = max(float(auto.norm()), float(num.norm()), 1e-12)
    rel = float((auto - num).norm()) / denom
    assert rel <= tol, f"relative gradient error {rel:.2e} exceeds {tol}"


class TestTextLoss:
    def test_perfect_prediction_is_zero(self):
        targets = torch.tensor([2, 0, 3])
        logits = torch.full((3, 5), -100.0)
        for i, t in enumerate(targets):
            logits[i, t] = 100.0
        assert float(text_loss(logits, targets, pad_id=4)) < 1e-6

    def test_uniform_logits_equal_log_vocab(self):
        logits = torch.zeros(6, 10, dtype=torch.float64)
        targets = torch.tensor([0, 1, 2, 3, 4, 5])
        assert float(text_loss(logits, targets, pad_id=9)) == pytest.approx(math.log(10), abs=1e-9)

    def test_matches_scalar_softmax_oracle(self):
        rng = np.random.default_rng(0)
        logits = torch.tensor(rng.normal(size=(3, 4)))
        targets = torch.tensor([1, 3, 0])
        # explicit softmax cross-entropy, one position at a time
        expected = 0.0
        for i in range(3):
            row = logits[i].numpy()
            p = np.exp(row - row.max())
            p /= p.sum()
            expected += -math.log(p[targets[i]])
        expected /= 3
        assert float(text_loss(logits, targets, pad_id=99)) == pytest.approx(expected, abs=1e-9)

    def test_pad_positions_excluded(self):
        logits = torch.zeros(4, 3, dtype=torch.float64)
        targets = torch.tensor([0, 2, 2, 1])
        full = float(text_loss(logits, targets, pad_id=2))
        assert full == pytest.approx(math.log(3), abs=1e-12)

    def test_all_pad_is_undefined(self):
        with pytest.raises(UndefinedLossError):
            text_loss(torch.zeros(2, 3), torch.tensor([1, 1]), pad_id=1)

    def test_monotone_in_target_mass(self):
        targets = torch.tensor([0])
        lo = torch.tensor([[1.0, 2.0]])
        hi = torch.tensor([[2.0, 1.0]])
        assert float(text_loss(hi, targets, 9)) < float(text_loss(lo, targets, 9))

    def test_gradient(self):
        rng = np.random.default_rng(1)
        targets = torch.tensor([0, 2, 1])
        check_grad(
            lambda x: text_loss(x, targets, pad_id=3),
            torch.tensor(rng.normal(size=(3, 4))),
        )


class TestDiceLoss:
    def test_perfect_saturated_prediction(self):
        target = torch.zeros(4, 4)
        target[1:3, 1:3] = 1.0
        logits = torch.where(target > 0, 100.0, -100.0)
        assert float(dice_loss(logits, target)) <= 1e-5

    def test_empty_target_with_confident_negative(self):
        target = torch.zeros(3, 3)
        logits = torch.full((3, 3), -100.0)
        assert float(dice_loss(logits, target)) <= 1e-5

    def test_hand_computed_fixture(self):
        # p uniform 0.5 on 2x2, one positive pixel: 1 - (2*0.5 + eps) / (2 + 1 + eps)
        logits = torch.zeros(2, 2, dtype=torch.float64)
        target = torch.tensor([[1.0, 0.0], [0.0, 0.0]], dtype=torch.float64)
        expected = 1 - (2 * 0.5 + 1e-6) / (2 + 1 + 1e-6)
        assert float(dice_loss(logits, target)) == pytest.approx(expected, abs=1e-9)
        assert expected == pytest.approx(2 / 3, abs=1e-6)

    def test_permutation_symmetry(self):
        rng = np.random.default_rng(2)
        logits = torch.tensor(rng.normal(size=(4, 4)))
        target = torch.tensor((rng.random((4, 4)) > 0.5).astype(np.float64))
        perm = rng.permutation(16)
        lp = logits.view(-1)[perm].view(4, 4)
        tp = target.view(-1)[perm].view(4, 4)
        assert float(dice_loss(logits, target)) == pytest.approx(float(dice_loss(lp, tp)), abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            dice_loss(torch.zeros(2, 2), torch.zeros(3, 3))

    def test_gradient(self):
        rng = np.random.default_rng(3)
        target = torch.tensor((rng.random((4, 4)) > 0.5).astype(np.float64))
        check_grad(lambda x: dice_loss(x, target), torch.tensor(rng.normal(size=(4, 4))))


class TestMaskLoss:
    def test_zero_logits_bce_is_log_two(self):
        logits = torch.zeros(5, 5, dtype=torch.float64)
        for target_fill in (0.0, 1.0):
            target = torch.full((5, 5), target_fill, dtype=torch.float64)
            assert float(mask_bce(logits, target)) == pytest.approx(math.log(2), abs=1e-9)

    def test_perfect_saturated_components(self):
        target = torch.zeros(4, 4)
        target[0] = 1.0
        logits = torch.where(target > 0, 100.0, -100.0)
        parts = mask_loss(logits, logits, target, target)
        for value in parts.values():
            assert float(value) <= 1e-5

    def test_matches_scalar_oracle_on_3x3(self):
        rng = np.random.default_rng(4)
        vl = torch.tensor(rng.normal(size=(3, 3)))
        al = torch.tensor(rng.normal(size=(3, 3)))
        vt = torch.tensor((rng.random((3, 3)) > 0.5).astype(np.float64))
        at = torch.tensor((rng.random((3, 3)) > 0.3).astype(np.float64))
        parts = mask_loss(vl, al, vt, at)

        def scalar_bce(logits, target):
            total = 0.0
            for i in range(3):
                for j in range(3):
                    z, t = float(logits[i, j]), float(target[i, j])
                    p = 1 / (1 + math.exp(-z))
                    total += -(t * math.log(p) + (1 - t) * math.log(1 - p))
            return total / 9

        def scalar_dice(logits, target):
            num = den_p = den_g = 0.0
            for i in range(3):
                for j in range(3):
                    p = 1 / (1 + math.exp(-float(logits[i, j])))
                    g = float(target[i, j])
                    num += p * g
                    den_p += p
                    den_g += g
            return 1 - (2 * num + 1e-6) / (den_p + den_g + 1e-6)

        assert float(parts["l_mask_ce_v"]) == pytest.approx(scalar_bce(vl, vt), abs=1e-9)
        assert float(parts["l_mask_ce_a"]) == pytest.approx(scalar_bce(al, at), abs=1e-9)
        assert float(parts["l_dice_v"]) == pytest.approx(scalar_dice(vl, vt), abs=1e-9)
        assert float(parts["l_dice_a"]) == pytest.approx(scalar_dice(al, at), abs=1e-9)

    def test_bce_gradient(self):
        rng = np.random.default_rng(5)
        target = torch.tensor((rng.random((4, 4)) > 0.5).astype(np.float64))
        check_grad(lambda x: mask_bce(x, target), torch.tensor(rng.normal(size=(4, 4))))


class TestOccLoss:
    def test_exact_rate_is_zero(self):
        parts = occ_loss(
            torch.tensor([0.3]), torch.tensor([0.3]),
            torch.zeros(1, 3, 2, 2), torch.zeros(1, 2, 2, dtype=torch.long),
        )
        assert float(parts["l_occ_rate"]) == 0.0

    def test_rate_half_off_is_quarter(self):
        parts = occ_loss(
            torch.tensor([0.5]), torch.tensor([0.0]),
            torch.zeros(1, 3, 2, 2), torch.zeros(1, 2, 2, dtype=torch.long),
        )
        assert float(parts["l_occ_rate"]) == pytest.approx(0.25, abs=1e-9)

    def test_uniform_spatial_logits_equal_log_three(self):
        parts = occ_loss(
            torch.tensor([0.0]), torch.tensor([0.0]),
            torch.zeros(1, 3, 4, 4, dtype=torch.float64),
            torch.randint(0, 3, (1, 4, 4)),
        )
        assert float(parts["l_occ_spatial"]) == pytest.approx(math.log(3), abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            occ_loss(torch.zeros(2), torch.zeros(3), torch.zeros(2, 3, 2, 2),
                     torch.zeros(2, 2, 2, dtype=torch.long))

    def test_gradients(self):
        rng = np.random.default_rng(6)
        target_map = torch.randint(0, 3, (2, 3, 3))
        r = torch.tensor(rng.uniform(0, 1, size=2))
        check_grad(
            lambda x: occ_loss(torch.sigmoid(x[:, 0, 0, 0]), r, x, target_map)["l_occ_spatial"],
            torch.tensor(rng.normal(size=(2, 3, 3, 3))),
        )
        check_grad(
            lambda x: occ_loss(x, r, torch.zeros(2, 3, 3, 3, dtype=torch.float64), target_map)["l_occ_rate"],
            torch.tensor(rng.uniform(0.01, 0.99, size=2)),
        )


class TestTotalLoss:
    def test_all_zero_components(self):
        parts = {"l_text": torch.tensor(0.0), "l_dice_v": torch.tensor(0.0)}
        assert float(total_loss(parts)) == 0.0

    def test_default_weights_sum(self):
        parts = {
            "l_text": torch.tensor(1.0),
            "l_mask_ce_v": torch.tensor(2.0),
            "l_dice_v": torch.tensor(3.0),
        }
        assert float(total_loss(parts)) == 6.0

    def test_absent_components_contribute_nothing(self):
        parts = {"l_text": torch.tensor(1.5)}
        weights = dict(DEFAULT_WEIGHTS, l_occ_rate=10.0)
        assert float(total_loss(parts, weights)) == 1.5

    def test_negative_weight_rejected(self):
        with pytest.raises(ConfigurationError):
            total_loss({"l_text": torch.tensor(1.0)}, {"l_text": -1.0})

    def test_unknown_weight_rejected(self):
        with pytest.raises(ConfigurationError):
            total_loss({"l_text": torch.tensor(1.0)}, {"nope": 1.0})


def test_all_losses_nonnegative_and_finite_on_random_inputs():
    rng = np.random.default_rng(7)
    for _ in range(20):
        logits = torch.tensor(rng.normal(scale=3, size=(4, 4)))
        target = torch.tensor((rng.random((4, 4)) > 0.5).astype(np.float64))
        for value in (float(dice_loss(logits, target)), float(mask_bce(logits, target))):
            assert value >= 0.0 and math.isfinite(value)
