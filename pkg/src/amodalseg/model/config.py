"""Model hyperparameters and the serialized config echo stored in checkpoints."""
from __future__ import annotations

from dataclasses import dataclass, asdict, field

from ..errors import ConfigurationError


@dataclass(frozen=True)
class ModelConfig:
    image_size: tuple[int, int] = (64, 64)
    feature_stride: int = 4
    feature_channels: int = 48
    seq_width: int = 128
    seq_layers: int = 2
    seq_heads: int = 4
    embed_dim: int = 64
    adapter_rank: int = 8  # 0 disables low-rank adapters
    adapter_alpha: float = 16.0
    enable_oc: bool = True
    enable_so: bool = True
    prefix_grid: int = 8
    max_question_len: int = 32
    max_answer_len: int = 48
    vocab: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        h, w = self.image_size
        s = self.feature_stride
        if s < 1 or (s & (s - 1)) != 0:
            raise ConfigurationError(f"feature_stride must be a power of two, got {s}")
        if h % s or w % s:
            raise ConfigurationError(f"image_size {self.image_size} not divisible by stride {s}")
        if self.adapter_rank < 0:
            raise ConfigurationError("adapter_rank must be >= 0")
        for name in ("feature_channels", "seq_width", "seq_layers", "seq_heads", "embed_dim",
                     "prefix_grid", "max_question_len", "max_answer_len"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.seq_width % self.seq_heads:
            raise ConfigurationError("seq_width must be divisible by seq_heads")

    @property
    def feature_size(self) -> tuple[int, int]:
        return (self.image_size[0] // self.feature_stride, self.image_size[1] // self.feature_stride)

    @property
    def prefix_len(self) -> int:
        return self.prefix_grid * self.prefix_grid

    @property
    def max_seq_len(self) -> int:
        # prefix + [BOS] question [SEP] answer [EOS] + slack
        return self.prefix_len + self.max_question_len + self.max_answer_len + 8

    def to_dict(self) -> dict:
        d = asdict(self)
        d["image_size"] = list(self.image_size)
        d["vocab"] = list(self.vocab)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["image_size"] = tuple(d["image_size"])
        d["vocab"] = tuple(d.get("vocab", ()))
        return cls(**d)

    def with_vocab(self, vocab_tokens) -> "ModelConfig":
        d = self.to_dict()
        d["vocab"] = list(vocab_tokens)
        return ModelConfig.from_dict(d)
