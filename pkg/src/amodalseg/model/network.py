"""The full reasoning-segmentation network.

Dataflow per conversation: image -> feature grid -> visual prefix for the
causal text model -> answer logits and hidden states -> per-[SEG] embeddings
-> prompt refinement -> (optional) occlusion condition encoding -> two
separate mask decoders -> (optional) spatial occlusion encoding over the
predicted mask probabilities.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ConfigurationError, ShapeError
from ..data.types import Conversation, SceneSample
from .. import losses as L
from .config import ModelConfig
from .heads import OcclusionConditionEncoder, PromptEncoder
from .textmodel import CausalTextModel
from .vision import ImageEncoder, MaskDecoder, SpatialOcclusionEncoder
from .vocab import Vocab


@dataclass
class ModelOutputs:
    """Per-conversation outputs; every per-[SEG] tensor stacks k entries."""

    answer_logits: torch.Tensor       # (L, |V|) teacher-forced next-token logits
    answer_targets: torch.Tensor      # (L,) the tokens those logits are trained toward
    e_mllm: torch.Tensor              # (k, d)
    e_r: torch.Tensor                 # (k, d)
    e_oa: torch.Tensor                # (k, d)
    r_hat: torch.Tensor | None        # (k,) or None when the condition encoder is off
    visible_logits: torch.Tensor      # (k, H, W)
    amodal_logits: torch.Tensor       # (k, H, W)
    spatial_logits: torch.Tensor | None  # (k, 3, H, W) or None when the spatial encoder is off

    @property
    def seg_count(self) -> int:
        return int(self.visible_logits.shape[0])


def extract_seg_embeddings(hidden_states: torch.Tensor, token_ids: torch.Tensor,
                           seg_id: int) -> torch.Tensor:
    """Rows of hidden_states at [SEG] positions, in textual order."""
    if hidden_states.shape[0] != token_ids.shape[0]:
        raise ShapeError(
            f"{hidden_states.shape[0]} hidden rows vs {token_ids.shape[0]} token ids"
        )
    return hidden_states[token_ids == seg_id]


class AmodalReasoner(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        if not config.vocab:
            raise ConfigurationError("model config carries no vocabulary")
        self.config = config
        self.vocab = Vocab(tuple(config.vocab))
        self.image_encoder = ImageEncoder(config.feature_channels, config.feature_stride)
        self.prefix_proj = nn.Linear(config.feature_channels, config.seq_width)
        self.text_model = CausalTextModel(
            vocab_size=len(self.vocab),
            width=config.seq_width,
            layers=config.seq_layers,
            heads=config.seq_heads,
            max_seq_len=config.max_seq_len,
            rank=config.adapter_rank,
            alpha=config.adapter_alpha,
        )
        self.seg_proj = nn.Linear(config.seq_width, config.embed_dim)
        self.prompt_encoder = PromptEncoder(config.embed_dim)
        self.visible_decoder = MaskDecoder(
            config.feature_channels, config.embed_dim, config.feature_stride
        )
        self.amodal_decoder = MaskDecoder(
            config.feature_channels, config.embed_dim, config.feature_stride
        )
        self.occlusion_encoder = OcclusionConditionEncoder(config.embed_dim) if config.enable_oc else None
        self.spatial_encoder = SpatialOcclusionEncoder() if config.enable_so else None

    # ---- vision ----

    def encode_image(self, image) -> torch.Tensor:
        """HxWx3 array in [0, 1] -> (C, H/s, W/s) feature grid."""
        if isinstance(image, np.ndarray):
            image = torch.from_numpy(np.array(image))  # copy: source arrays are frozen
        if image.dim() == 3 and image.shape[-1] == 3:
            image = image.permute(2, 0, 1)
        if tuple(image.shape[1:]) != tuple(self.config.image_size):
            raise ShapeError(
                f"image is {tuple(image.shape[1:])}, config expects {self.config.image_size}"
            )
        param = next(self.image_encoder.parameters())
        return self.image_encoder(image.to(param.dtype))

    def _prefix(self, features: torch.Tensor) -> torch.Tensor:
        g = self.config.prefix_grid
        pooled = F.adaptive_avg_pool2d(features.unsqueeze(0), (g, g)).squeeze(0)
        tokens = pooled.flatten(1).t()  # (g*g, C)
        return self.prefix_proj(tokens)

    # ---- language ----

    def _text_ids(self, question_ids, answer_ids) -> torch.Tensor:
        v = self.vocab
        ids = [v.bos_id, *question_ids, v.sep_id, *answer_ids]
        return torch.tensor(ids, dtype=torch.long)

    def forward_text(self, features: torch.Tensor, question_ids, answer_ids):
        """Teacher-forced pass. Returns (logits (L, |V|), hidden (L, width)) where
        logits[i] predicts answer_ids[i] and hidden[i] sits above that token."""
        if len(question_ids) > self.config.max_question_len:
            raise ConfigurationError(
                f"question has {len(question_ids)} tokens, limit {self.config.max_question_len}"
            )
        if len(answer_ids) > self.config.max_answer_len + 1:
            raise ConfigurationError(
                f"answer has {len(answer_ids)} tokens, limit {self.config.max_answer_len + 1}"
            )
        prefix = self._prefix(features)
        text_ids = self._text_ids(question_ids, answer_ids)
        embs = torch.cat([prefix, self.text_model.embed_tokens(text_ids)], dim=0)
        hidden, _ = self.text_model.run(embs)
        base = prefix.shape[0] + 1 + len(question_ids) + 1  # index of first answer token
        n = len(answer_ids)
        logits = self.text_model.logits(hidden[base - 1 : base - 1 + n])
        answer_hidden = hidden[base : base + n]
        return logits, answer_hidden

    @torch.no_grad()
    def generate_answer(self, features: torch.Tensor, question_ids,
                        max_len: int | None = None):
        """Greedy decoding. Returns (answer_ids, answer_hidden, truncated);
        answer_ids excludes the end token; truncated means no end token fired."""
        if max_len is None:
            max_len = self.config.max_answer_len
        prefix = self._prefix(features)
        v = self.vocab
        prompt_ids = torch.tensor([v.bos_id, *question_ids, v.sep_id], dtype=torch.long)
        embs = torch.cat([prefix, self.text_model.embed_tokens(prompt_ids)], dim=0)
        hidden, cache = self.text_model.run(embs)
        pos = embs.shape[0]
        next_id = int(self.text_model.logits(hidden[-1:]).argmax(dim=-1))
        out_ids: list[int] = []
        out_hidden: list[torch.Tensor] = []
        truncated = False
        while True:
            if next_id == v.eos_id:
                break
            if len(out_ids) >= max_len:
                truncated = True
                break
            out_ids.append(next_id)
            tok = torch.tensor([next_id], dtype=torch.long)
            hidden, cache = self.text_model.run(self.text_model.embed_tokens(tok), pos, cache)
            pos += 1
            out_hidden.append(hidden[-1])
            next_id = int(self.text_model.logits(hidden[-1:]).argmax(dim=-1))
        answer_hidden = (
            torch.stack(out_hidden)
            if out_hidden
            else torch.zeros(0, self.config.seq_width, dtype=hidden.dtype)
        )
        return out_ids, answer_hidden, truncated

    # ---- segmentation heads ----

    def seg_embeddings(self, answer_hidden: torch.Tensor, answer_ids: torch.Tensor):
        """(e_mllm, e_r, e_oa, r_hat) for every [SEG] in the answer."""
        h = extract_seg_embeddings(answer_hidden, answer_ids, self.vocab.seg_id)
        e_mllm = self.seg_proj(h)
        e_r = self.prompt_encoder(e_mllm)
        if self.occlusion_encoder is not None:
            e_oa, r_hat = self.occlusion_encoder(e_r)
        else:
            e_oa, r_hat = e_r, None
        return e_mllm, e_r, e_oa, r_hat

    def occlusion_condition_encode(self, e_r: torch.Tensor):
        if self.occlusion_encoder is None:
            raise ConfigurationError("occlusion condition encoder is disabled (enable_oc=False)")
        return self.occlusion_encoder(e_r)

    def decode_visible(self, features: torch.Tensor, e_r: torch.Tensor) -> torch.Tensor:
        return self.visible_decoder(features, e_r)

    def decode_amodal(self, features: torch.Tensor, e_oa: torch.Tensor) -> torch.Tensor:
        return self.amodal_decoder(features, e_oa)

    def spatial_occlusion_encode(self, visible_logits, amodal_logits) -> torch.Tensor:
        if self.spatial_encoder is None:
            raise ConfigurationError("spatial occlusion encoder is disabled (enable_so=False)")
        return self.spatial_encoder(visible_logits, amodal_logits)

    # ---- full passes ----

    def forward_tokens(self, image, question_ids, answer_ids) -> ModelOutputs:
        """Teacher-forced full pass on raw token ids (answer_ids include the end token)."""
        features = self.encode_image(image)
        answer_tensor = torch.tensor(list(answer_ids), dtype=torch.long)
        logits, answer_hidden = self.forward_text(features, question_ids, answer_ids)
        e_mllm, e_r, e_oa, r_hat = self.seg_embeddings(answer_hidden, answer_tensor)
        visible_logits = self.decode_visible(features, e_r)
        amodal_logits = self.decode_amodal(features, e_oa)
        spatial_logits = None
        if self.spatial_encoder is not None and e_r.shape[0] > 0:
            spatial_logits = self.spatial_occlusion_encode(visible_logits, amodal_logits)
        return ModelOutputs(
            answer_logits=logits,
            answer_targets=answer_tensor,
            e_mllm=e_mllm,
            e_r=e_r,
            e_oa=e_oa,
            r_hat=r_hat,
            visible_logits=visible_logits,
            amodal_logits=amodal_logits,
            spatial_logits=spatial_logits,
        )

    def forward(self, batch: list[tuple[SceneSample, Conversation]]) -> list[ModelOutputs]:
        outputs = []
        for sample, conv in batch:
            q_ids = self.vocab.encode(conv.question)
            a_ids = self.vocab.encode(conv.answer) + [self.vocab.eos_id]
            try:
                outputs.append(self.forward_tokens(sample.image, q_ids, a_ids))
            except Exception as exc:
                raise type(exc)(f"sample {sample.sample_id!r}: {exc}") from exc
        return outputs

    @torch.no_grad()
    def predict(self, sample: SceneSample, conversation: Conversation):
        """Greedy inference for evaluation; [SEG] embeddings come from the
        generated answer's hidden states."""
        from ..evaluation.runner import ConversationPrediction, SegPrediction

        self.eval()
        features = self.encode_image(sample.image)
        q_ids = self.vocab.encode(conversation.question)
        answer_ids, answer_hidden, truncated = self.generate_answer(features, q_ids)
        answer_tensor = torch.tensor(answer_ids, dtype=torch.long)
        e_mllm, e_r, e_oa, r_hat = self.seg_embeddings(answer_hidden, answer_tensor)
        segs = []
        if e_r.shape[0] > 0:
            visible_logits = self.decode_visible(features, e_r)
            amodal_logits = self.decode_amodal(features, e_oa)
            spatial_logits = None
            if self.spatial_encoder is not None:
                spatial_logits = self.spatial_occlusion_encode(visible_logits, amodal_logits)
            for i in range(e_r.shape[0]):
                segs.append(
                    SegPrediction(
                        visible_logits=visible_logits[i].numpy(),
                        amodal_logits=amodal_logits[i].numpy(),
                        rate=float(r_hat[i]) if r_hat is not None else None,
                        spatial_logits=spatial_logits[i].numpy() if spatial_logits is not None else None,
                    )
                )
        return ConversationPrediction(
            answer_tokens=self.vocab.decode(answer_ids),
            segs=segs,
            truncated=truncated,
        )


def conversation_targets(sample: SceneSample, conversation: Conversation) -> dict[str, torch.Tensor]:
    """Stacked per-[SEG] ground truth tensors for one conversation."""
    targets = [sample.objects[tid] for tid in conversation.target_ids]
    visible = torch.from_numpy(np.stack([t.visible_mask for t in targets]).astype(np.float32))
    amodal = torch.from_numpy(np.stack([t.amodal_mask for t in targets]).astype(np.float32))
    rate = torch.tensor([t.occlusion_rate for t in targets], dtype=torch.float32)
    spatial = torch.from_numpy(np.stack([t.spatial_map for t in targets]).astype(np.int64))
    return {"visible": visible, "amodal": amodal, "rate": rate, "spatial": spatial}


def compute_losses(outputs: ModelOutputs, targets: dict[str, torch.Tensor], pad_id: int,
                   weights: dict[str, float] | None = None) -> L.LossBreakdown:
    """Assemble the loss breakdown for one conversation's outputs."""
    components: dict[str, torch.Tensor] = {
        "l_text": L.text_loss(outputs.answer_logits, outputs.answer_targets, pad_id)
    }
    if outputs.seg_count > 0:
        components.update(
            L.mask_loss(
                outputs.visible_logits, outputs.amodal_logits,
                targets["visible"], targets["amodal"],
            )
        )
        if outputs.r_hat is not None:
            components["l_occ_rate"] = ((outputs.r_hat - targets["rate"]) ** 2).mean()
        if outputs.spatial_logits is not None:
            components["l_occ_spatial"] = F.cross_entropy(
                outputs.spatial_logits, targets["spatial"]
            )
    breakdown = L.LossBreakdown(**{name: components.get(name) for name in L.LOSS_NAMES})
    breakdown.total = L.total_loss(components, weights)
    return breakdown


def _param_seed(run_seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{run_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF


def init_parameters(model: nn.Module, seed: int) -> None:
    """Fan-in-scaled uniform init, seeded per parameter name so that shared
    submodules initialize identically across architecture variants."""
    with torch.no_grad():
        for name, param in model.named_parameters():
            gen = torch.Generator().manual_seed(_param_seed(seed, name))
            if "lora_B" in name:
                param.zero_()
            elif param.dim() >= 2:
                fan_in = 1
                for s in param.shape[1:]:
                    fan_in *= int(s)
                bound = fan_in ** -0.5
                param.copy_(
                    torch.empty(param.shape, dtype=param.dtype).uniform_(-bound, bound, generator=gen)
                )
            elif name.endswith(".weight"):  # LayerNorm scales
                param.fill_(1.0)
            else:
                param.zero_()


def build_model(config: ModelConfig, seed: int) -> AmodalReasoner:
    model = AmodalReasoner(config)
    init_parameters(model, seed)
    return model
