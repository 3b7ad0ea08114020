import numpy as np
import pytest
import torch

from amodalseg.data.types import Conversation
from amodalseg.errors import ConfigurationError, ShapeError, VocabularyError
from amodalseg.model.config import ModelConfig
from amodalseg.model.heads import OcclusionConditionEncoder, PromptEncoder
from amodalseg.model.lora import is_adapter_param
from amodalseg.model.network import (
    AmodalReasoner,
    build_model,
    compute_losses,
    conversation_targets,
    extract_seg_embeddings,
)
from amodalseg.model.vocab import Vocab, detokenize, tokenize

from conftest import make_sample
from test_losses import check_grad

TEXTS = [
    "Which object is partially hidden from view?",
    "The blue rectangle[SEG] is partially hidden behind the red rectangle[SEG].",
    "It is here: the red rectangle[SEG].",
]


def tiny_config(**overrides) -> ModelConfig:
    defaults = dict(
        image_size=(32, 32), feature_stride=4, feature_channels=16, seq_width=32,
        seq_layers=1, seq_heads=2, embed_dim=16, adapter_rank=4, prefix_grid=4,
        max_question_len=24, max_answer_len=32,
        vocab=Vocab.from_texts(TEXTS).tokens,
    )
    defaults.update(overrides)
    return ModelConfig(**defaults)


@pytest.fixture(scope="module")
def tiny_model():
    return build_model(tiny_config(), seed=0)


@pytest.fixture
def tiny_sample():
    return make_sample(size=(32, 32))


class TestModelConfig:
    def test_image_size_must_divide_stride(self):
        with pytest.raises(ConfigurationError, match="divisible"):
            tiny_config(image_size=(30, 30))

    def test_negative_rank_rejected(self):
        with pytest.raises(ConfigurationError, match="adapter_rank"):
            tiny_config(adapter_rank=-1)

    def test_width_head_divisibility(self):
        with pytest.raises(ConfigurationError, match="divisible by seq_heads"):
            tiny_config(seq_width=30, seq_heads=4)

    def test_round_trips_through_dict(self):
        config = tiny_config()
        assert ModelConfig.from_dict(config.to_dict()) == config


class TestTokenizer:
    def test_seg_is_atomic(self):
        assert tokenize("the red ellipse[SEG], done.") == [
            "the", "red", "ellipse", "[SEG]", ",", "done", ".",
        ]

    def test_detokenize_round_trip(self):
        text = "The blue rectangle[SEG] is hidden."
        assert detokenize(tokenize(text)) == text

    def test_unknown_token_raises(self):
        vocab = Vocab.from_texts(["hello world"])
        with pytest.raises(VocabularyError):
            vocab.encode("hello unseen")


class TestImageEncoder:
    def test_zero_image_shape_contract(self, tiny_model):
        feats = tiny_model.encode_image(np.zeros((32, 32, 3), np.float32))
        assert tuple(feats.shape) == (16, 8, 8)
        assert torch.isfinite(feats).all()

    def test_eval_determinism(self, tiny_model, tiny_sample):
        tiny_model.eval()
        a = tiny_model.encode_image(tiny_sample.image)
        b = tiny_model.encode_image(tiny_sample.image)
        assert torch.equal(a, b)

    def test_no_flip_invariance(self, tiny_model):
        rng = np.random.default_rng(0)
        image = rng.random((32, 32, 3)).astype(np.float32)
        a = tiny_model.encode_image(image)
        b = tiny_model.encode_image(image[:, ::-1].copy())
        assert not torch.allclose(a, b)

    def test_size_mismatch(self, tiny_model):
        with pytest.raises(ShapeError):
            tiny_model.encode_image(np.zeros((16, 16, 3), np.float32))


class TestForwardText:
    def test_logit_shape_contract(self, tiny_model, tiny_sample):
        feats = tiny_model.encode_image(tiny_sample.image)
        q = tiny_model.vocab.encode(TEXTS[0])
        a = tiny_model.vocab.encode(TEXTS[2])
        logits, hidden = tiny_model.forward_text(feats, q, a)
        assert tuple(logits.shape) == (len(a), len(tiny_model.vocab))
        assert tuple(hidden.shape) == (len(a), 32)

    def test_adapter_gradient_nonzero(self, tiny_sample):
        model = build_model(tiny_config(), seed=1)
        model.text_model.freeze_base()
        conv = tiny_sample.conversations[0]
        out = model([(tiny_sample, conv)])[0]
        losses = compute_losses(out, conversation_targets(tiny_sample, conv), model.vocab.pad_id)
        losses.l_text.backward()
        adapter_grads = [
            p.grad for n, p in model.text_model.named_parameters() if is_adapter_param(n)
        ]
        assert any(g is not None and g.abs().sum() > 0 for g in adapter_grads)

    def test_rank_zero_frozen_base_has_no_grads(self, tiny_sample):
        model = build_model(tiny_config(adapter_rank=0), seed=1)
        model.text_model.freeze_base()
        feats = tiny_model_feats = model.encode_image(tiny_sample.image).detach()
        q = model.vocab.encode(TEXTS[0])
        a = model.vocab.encode(TEXTS[2]) + [model.vocab.eos_id]
        logits, _ = model.forward_text(tiny_model_feats, q, a)
        loss = logits.sum()
        loss.backward()
        for name, p in model.text_model.named_parameters():
            assert p.grad is None or p.grad.abs().sum() == 0, name
        del feats

    def test_unknown_token_id_rejected(self, tiny_model, tiny_sample):
        feats = tiny_model.encode_image(tiny_sample.image)
        with pytest.raises(VocabularyError):
            tiny_model.forward_text(feats, [10**6], [1])


class TestGeneration:
    def test_max_len_one(self, tiny_model, tiny_sample):
        feats = tiny_model.encode_image(tiny_sample.image)
        q = tiny_model.vocab.encode(TEXTS[0])
        ids, hidden, truncated = tiny_model.generate_answer(feats, q, max_len=1)
        assert len(ids) <= 1
        assert hidden.shape[0] == len(ids)

    def test_greedy_determinism(self, tiny_model, tiny_sample):
        tiny_model.eval()
        feats = tiny_model.encode_image(tiny_sample.image)
        q = tiny_model.vocab.encode(TEXTS[0])
        a1 = tiny_model.generate_answer(feats, q)[0]
        a2 = tiny_model.generate_answer(feats, q)[0]
        assert a1 == a2

    def test_cache_matches_teacher_forcing(self, tiny_model, tiny_sample):
        """Hidden states collected during cached generation equal the hidden
        states of a full teacher-forced pass over the generated tokens."""
        tiny_model.eval()
        feats = tiny_model.encode_image(tiny_sample.image)
        q = tiny_model.vocab.encode(TEXTS[0])
        ids, gen_hidden, truncated = tiny_model.generate_answer(feats, q, max_len=8)
        if not ids:
            pytest.skip("random init emitted the end token immediately")
        with torch.no_grad():
            _, tf_hidden = tiny_model.forward_text(feats, q, ids)
        assert torch.allclose(gen_hidden, tf_hidden, atol=1e-5)


class TestSegEmbeddings:
    def test_order_and_count(self):
        hidden = torch.arange(12, dtype=torch.float32).view(4, 3)
        ids = torch.tensor([7, 3, 9, 3])
        out = extract_seg_embeddings(hidden, ids, seg_id=3)
        assert out.shape == (2, 3)
        assert torch.equal(out[0], hidden[1])
        assert torch.equal(out[1], hidden[3])

    def test_no_seg_is_empty(self):
        hidden = torch.zeros(3, 4)
        out = extract_seg_embeddings(hidden, torch.tensor([1, 2, 4]), seg_id=3)
        assert out.shape == (0, 4)

    @pytest.mark.parametrize("k", [0, 1, 2, 3, 5])
    def test_multiplicity(self, tiny_model, tiny_sample, k):
        v = tiny_model.vocab
        a_ids = []
        for _ in range(k):
            a_ids += v.encode("the red rectangle[SEG]")
        a_ids += [v.eos_id]
        out = tiny_model.forward_tokens(tiny_sample.image, v.encode(TEXTS[0]), a_ids)
        assert out.seg_count == k
        assert out.visible_logits.shape[0] == k
        assert out.amodal_logits.shape[0] == k
        if k == 0:
            assert out.spatial_logits is None
        else:
            assert tuple(out.spatial_logits.shape) == (k, 3, 32, 32)


class TestHeads:
    def test_prompt_encoder_zero_vector_finite(self):
        enc = PromptEncoder(8)
        out = enc(torch.zeros(8))
        assert torch.isfinite(out).all()

    def test_prompt_encoder_gradient(self):
        enc = PromptEncoder(6).double()
        x = torch.tensor(np.random.default_rng(0).normal(size=6))
        check_grad(lambda v: enc(v).sum() + (enc(v) ** 2).sum(), x)

    def test_prompt_encoder_distinct_outputs(self):
        enc = PromptEncoder(8)
        a = enc(torch.randn(8, generator=torch.Generator().manual_seed(0)))
        b = enc(torch.randn(8, generator=torch.Generator().manual_seed(1)))
        assert not torch.allclose(a, b)

    def test_oc_encoder_rate_range(self):
        enc = OcclusionConditionEncoder(8)
        for seed in range(5):
            _, r = enc(torch.randn(3, 8, generator=torch.Generator().manual_seed(seed)))
            assert ((r > 0) & (r < 1)).all()

    def test_oc_encoder_zero_preactivation_gives_half(self):
        enc = OcclusionConditionEncoder(8)
        with torch.no_grad():
            enc.rate_head.weight.zero_()
            enc.rate_head.bias.zero_()
        _, r = enc(torch.randn(2, 8))
        assert torch.allclose(r, torch.full((2,), 0.5))

    def test_oc_encoder_gradients(self):
        enc = OcclusionConditionEncoder(6).double()
        rng = np.random.default_rng(1)
        x = torch.tensor(rng.normal(size=(2, 6)))
        check_grad(lambda v: enc(v)[0].sum(), x)
        check_grad(lambda v: enc(v)[1].sum(), x)

    def test_oc_disabled_raises(self, tiny_sample):
        model = build_model(tiny_config(enable_oc=False), seed=0)
        with pytest.raises(ConfigurationError):
            model.occlusion_condition_encode(torch.zeros(1, 16))


class TestDecoders:
    def test_output_shape_matches_image(self, tiny_model, tiny_sample):
        feats = tiny_model.encode_image(tiny_sample.image)
        e = torch.randn(2, 16, generator=torch.Generator().manual_seed(0))
        out = tiny_model.decode_visible(feats, e)
        assert tuple(out.shape) == (2, 32, 32)

    def test_embedding_conditions_the_mask(self, tiny_model, tiny_sample):
        feats = tiny_model.encode_image(tiny_sample.image)
        g = torch.Generator().manual_seed(3)
        e1, e2 = torch.randn(1, 16, generator=g), torch.randn(1, 16, generator=g)
        m1 = tiny_model.decode_visible(feats, e1)
        m2 = tiny_model.decode_visible(feats, e2)
        assert not torch.allclose(m1, m2)

    def test_decoders_have_disjoint_parameters(self, tiny_model):
        vis = {id(p) for p in tiny_model.visible_decoder.parameters()}
        amo = {id(p) for p in tiny_model.amodal_decoder.parameters()}
        assert vis.isdisjoint(amo)

    def test_width_mismatch(self, tiny_model, tiny_sample):
        feats = tiny_model.encode_image(tiny_sample.image)
        with pytest.raises((ShapeError, RuntimeError)):
            tiny_model.decode_visible(feats[:4], torch.randn(1, 16))


class TestSpatialEncoder:
    def test_three_channels_full_resolution(self, tiny_model):
        out = tiny_model.spatial_occlusion_encode(torch.randn(2, 32, 32), torch.randn(2, 32, 32))
        assert tuple(out.shape) == (2, 3, 32, 32)

    def test_gradient_reaches_visible_decoder(self, tiny_sample):
        model = build_model(tiny_config(), seed=2)
        conv = tiny_sample.conversations[0]
        out = model([(tiny_sample, conv)])[0]
        losses = compute_losses(out, conversation_targets(tiny_sample, conv), model.vocab.pad_id)
        losses.l_occ_spatial.backward()
        grads = [p.grad for p in model.visible_decoder.parameters()]
        assert any(g is not None and g.abs().sum() > 0 for g in grads)

    def test_channel_permutation_changes_output(self, tiny_model):
        g = torch.Generator().manual_seed(5)
        a, b = torch.randn(1, 32, 32, generator=g), torch.randn(1, 32, 32, generator=g)
        assert not torch.allclose(
            tiny_model.spatial_occlusion_encode(a, b),
            tiny_model.spatial_occlusion_encode(b, a),
        )

    def test_shape_mismatch(self, tiny_model):
        with pytest.raises(ShapeError):
            tiny_model.spatial_occlusion_encode(torch.randn(1, 32, 32), torch.randn(1, 16, 16))


class TestFullForward:
    def test_three_seg_conversation(self, tiny_model, tiny_sample):
        conv = Conversation(
            question="Which object is partially hidden from view?",
            answer=(
                "The blue rectangle[SEG] is partially hidden behind the red rectangle[SEG]."
                " It is here: the red rectangle[SEG]."
            ),
            target_ids=("blue-rectangle", "red-rectangle", "red-rectangle"),
        )
        out = tiny_model([(tiny_sample, conv)])[0]
        assert out.seg_count == 3
        assert out.visible_logits.shape == (3, 32, 32)
        assert out.amodal_logits.shape == (3, 32, 32)

    def test_baseline_toggles_strip_outputs(self, tiny_sample):
        model = build_model(tiny_config(enable_oc=False, enable_so=False), seed=0)
        conv = tiny_sample.conversations[0]
        out = model([(tiny_sample, conv)])[0]
        assert out.r_hat is None
        assert out.spatial_logits is None
        assert torch.equal(out.e_oa, out.e_r)  # pass-through when the encoder is off

    def test_full_toggles_emit_everything(self, tiny_model, tiny_sample):
        out = tiny_model([(tiny_sample, tiny_sample.conversations[0])])[0]
        assert out.r_hat is not None and out.r_hat.shape == (2,)
        assert out.spatial_logits is not None

    def test_eval_mode_bit_identical(self, tiny_model, tiny_sample):
        tiny_model.eval()
        conv = tiny_sample.conversations[0]
        with torch.no_grad():
            a = tiny_model([(tiny_sample, conv)])[0]
            b = tiny_model([(tiny_sample, conv)])[0]
        assert torch.equal(a.visible_logits, b.visible_logits)
        assert torch.equal(a.answer_logits, b.answer_logits)


class TestFreezingContract:
    def test_one_step_changes_only_adapters(self, tiny_sample):
        model = build_model(tiny_config(adapter_rank=4), seed=3)
        model.text_model.freeze_base()
        base_before = {
            n: p.detach().clone()
            for n, p in model.text_model.named_parameters()
            if not is_adapter_param(n)
        }
        adapters_before = {
            n: p.detach().clone()
            for n, p in model.text_model.named_parameters()
            if is_adapter_param(n)
        }
        opt = torch.optim.AdamW(
            [p for p in model.parameters() if p.requires_grad], lr=1e-2
        )
        conv = tiny_sample.conversations[0]
        out = model([(tiny_sample, conv)])[0]
        losses = compute_losses(out, conversation_targets(tiny_sample, conv), model.vocab.pad_id)
        losses.total.backward()
        opt.step()
        for n, p in model.text_model.named_parameters():
            if not is_adapter_param(n):
                assert torch.equal(p, base_before[n]), f"base parameter {n} changed"
        changed = [
            n for n, p in model.text_model.named_parameters()
            if is_adapter_param(n) and not torch.equal(p, adapters_before[n])
        ]
        assert changed, "no adapter parameter changed"
