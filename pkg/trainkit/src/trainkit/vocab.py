"""Token tables for the sequence-to-sequence model.

Tables are closed-world over the observed corpus by default; a full token
inventory exported by the upstream toolkit (one token per line) can be
merged in via ``extra``. Specials sit at fixed indices so checkpoints stay
interchangeable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIALS = ("<pad>", "<bos>", "<eos>", "<unk>")


@dataclass
class Vocab:
    tokens: List[str]  # includes the four specials at indices 0..3

    def __post_init__(self):
        if self.tokens[:4] != list(SPECIALS):
            raise ValueError("vocabulary must start with the special tokens")
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ValueError("duplicate token in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.index.get(t, UNK) for t in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.tokens[i] for i in ids if i >= len(SPECIALS)]

    def unk_tokens(self, tokens: Iterable[str]) -> List[str]:
        return sorted({t for t in tokens if t not in self.index})


def build_vocab(lines: Iterable[str], extra: Optional[Iterable[str]] = None) -> Vocab:
    """Deterministic table: specials, then the sorted observed tokens."""
    seen = set()
    for line in lines:
        seen.update(line.split())
    if extra is not None:
        seen.update(extra)
    if not seen:
        raise ValueError("empty corpus: no tokens to build a vocabulary from")
    return Vocab(list(SPECIALS) + sorted(seen))


def read_lines(path) -> List[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()
