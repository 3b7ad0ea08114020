"""Word-level tokenizer and vocabulary.

The tokenizer keeps "[SEG]" atomic even when glued to a word ("ellipse[SEG]"
splits into "ellipse", "[SEG]") and treats punctuation as single tokens.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import VocabularyError

PAD, BOS, EOS, SEP, SEG = "[PAD]", "[BOS]", "[EOS]", "[SEP]", "[SEG]"
SPECIALS = (PAD, BOS, EOS, SEP, SEG)

_TOKEN_RE = re.compile(r"\[SEG\]|[A-Za-z0-9']+|[^\sA-Za-z0-9]")
_NO_SPACE_BEFORE = {SEG, ",", ".", "?", "!", ";", ":"}


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def detokenize(tokens) -> str:
    parts: list[str] = []
    for tok in tokens:
        if parts and tok not in _NO_SPACE_BEFORE:
            parts.append(" ")
        parts.append(tok)
    return "".join(parts)


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tokens)})
        if len(self._index) != len(self.tokens):
            raise VocabularyError("duplicate tokens in vocabulary")
        for special in SPECIALS:
            if special not in self._index:
                raise VocabularyError(f"vocabulary is missing special token {special}")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return self._index[PAD]

    @property
    def bos_id(self) -> int:
        return self._index[BOS]

    @property
    def eos_id(self) -> int:
        return self._index[EOS]

    @property
    def sep_id(self) -> int:
        return self._index[SEP]

    @property
    def seg_id(self) -> int:
        return self._index[SEG]

    def encode(self, text: str) -> list[int]:
        ids = []
        for tok in tokenize(text):
            if tok not in self._index:
                raise VocabularyError(f"unknown token {tok!r}")
            ids.append(self._index[tok])
        return ids

    def decode(self, ids) -> list[str]:
        out = []
        for i in ids:
            if not 0 <= int(i) < len(self.tokens):
                raise VocabularyError(f"token id {int(i)} outside vocabulary of size {len(self.tokens)}")
            out.append(self.tokens[int(i)])
        return out

    @classmethod
    def from_texts(cls, texts, extra_tokens=()) -> "Vocab":
        words: set[str] = set(extra_tokens)
        for text in texts:
            words.update(tokenize(text))
        words -= set(SPECIALS)
        return cls(tokens=SPECIALS + tuple(sorted(words)))


def corpus_vocab(samples, extra_tokens=()) -> Vocab:
    """Vocabulary over every question and answer in a dataset plus extras."""
    texts = []
    for sample in samples:
        for conv in sample.conversations:
            texts.append(conv.question)
            texts.append(conv.answer)
    return Vocab.from_texts(texts, extra_tokens=extra_tokens)
