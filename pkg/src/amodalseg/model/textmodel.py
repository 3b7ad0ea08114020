"""Causal transformer over a visual prefix plus text tokens.

Attention projections are LoRALinear so the sequence model supports
frozen-base adapter training. Generation uses a per-layer key/value cache and
is exactly equivalent to recomputing the full sequence (tested).
"""
from __future__ import annotations

import math

import torch
import torch.nn as nn

from ..errors import VocabularyError
from .lora import LoRALinear

KVCache = list[tuple[torch.Tensor, torch.Tensor] | None]


class CausalSelfAttention(nn.Module):
    def __init__(self, width: int, heads: int, rank: int, alpha: float):
        super().__init__()
        self.heads = heads
        self.head_dim = width // heads
        self.q_proj = LoRALinear(width, width, rank, alpha)
        self.k_proj = LoRALinear(width, width, rank, alpha)
        self.v_proj = LoRALinear(width, width, rank, alpha)
        self.o_proj = LoRALinear(width, width, rank, alpha)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        t, _ = x.shape
        return x.view(t, self.heads, self.head_dim).transpose(0, 1)  # (heads, T, hd)

    def forward(self, x: torch.Tensor, past: tuple | None = None):
        """x: (T_new, width). past: optional (k, v) with shape (heads, T_past, hd)."""
        q = self._split(self.q_proj(x))
        k = self._split(self.k_proj(x))
        v = self._split(self.v_proj(x))
        past_len = 0
        if past is not None:
            pk, pv = past
            past_len = pk.shape[1]
            k = torch.cat([pk, k], dim=1)
            v = torch.cat([pv, v], dim=1)
        t_new, t_all = q.shape[1], k.shape[1]
        scores = (q @ k.transpose(-2, -1)) / math.sqrt(self.head_dim)
        # Position i of the new chunk may attend to absolute positions <= past_len + i.
        cols = torch.arange(t_all, device=x.device)
        rows = torch.arange(t_new, device=x.device).unsqueeze(1) + past_len
        scores = scores.masked_fill(cols.unsqueeze(0) > rows, float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        out = (attn @ v).transpose(0, 1).reshape(t_new, -1)
        return self.o_proj(out), (k, v)


class TransformerBlock(nn.Module):
    def __init__(self, width: int, heads: int, rank: int, alpha: float):
        super().__init__()
        self.ln1 = nn.LayerNorm(width)
        self.attn = CausalSelfAttention(width, heads, rank, alpha)
        self.ln2 = nn.LayerNorm(width)
        self.mlp = nn.Sequential(
            nn.Linear(width, 4 * width), nn.GELU(), nn.Linear(4 * width, width)
        )

    def forward(self, x: torch.Tensor, past: tuple | None = None):
        attn_out, kv = self.attn(self.ln1(x), past)
        x = x + attn_out
        x = x + self.mlp(self.ln2(x))
        return x, kv


class CausalTextModel(nn.Module):
    """Token + position embeddings, transformer blocks, and an LM head."""

    def __init__(self, vocab_size: int, width: int, layers: int, heads: int,
                 max_seq_len: int, rank: int = 0, alpha: float = 16.0):
        super().__init__()
        self.vocab_size = vocab_size
        self.max_seq_len = max_seq_len
        self.tok_emb = nn.Embedding(vocab_size, width)
        self.pos_emb = nn.Parameter(torch.zeros(max_seq_len, width))
        self.blocks = nn.ModuleList(
            TransformerBlock(width, heads, rank, alpha) for _ in range(layers)
        )
        self.ln_f = nn.LayerNorm(width)
        self.head = nn.Linear(width, vocab_size)

    def embed_tokens(self, token_ids: torch.Tensor) -> torch.Tensor:
        if token_ids.numel() and (int(token_ids.min()) < 0 or int(token_ids.max()) >= self.vocab_size):
            raise VocabularyError(
                f"token id outside vocabulary of size {self.vocab_size}"
            )
        return self.tok_emb(token_ids)

    def run(self, embeddings: torch.Tensor, start_pos: int = 0,
            past: KVCache | None = None) -> tuple[torch.Tensor, KVCache]:
        """Hidden states (post final LayerNorm) for a chunk starting at start_pos."""
        t = embeddings.shape[0]
        if start_pos + t > self.max_seq_len:
            raise VocabularyError(
                f"sequence of length {start_pos + t} exceeds max_seq_len {self.max_seq_len}"
            )
        x = embeddings + self.pos_emb[start_pos : start_pos + t]
        new_cache: KVCache = []
        for i, block in enumerate(self.blocks):
            x, kv = block(x, past[i] if past is not None else None)
            new_cache.append(kv)
        return self.ln_f(x), new_cache

    def logits(self, hidden: torch.Tensor) -> torch.Tensor:
        return self.head(hidden)

    def freeze_base(self) -> None:
        from .lora import freeze_base

        freeze_base(self)
