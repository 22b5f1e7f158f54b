"""Paired-line datasets and padded batching."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import torch

from .vocab import BOS, EOS, PAD, Vocab


@dataclass
class Pair:
    src: List[int]
    tgt: List[int]  # includes trailing EOS, no BOS


@dataclass
class PairDataset:
    pairs: List[Pair]
    skipped: int = 0

    def __len__(self):
        return len(self.pairs)


def make_dataset(
    src_lines: List[str],
    tgt_lines: List[str],
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    max_len: Optional[int] = None,
) -> PairDataset:
    """Encode aligned lines; pairs beyond ``max_len`` are skipped (counted)."""
    if len(src_lines) != len(tgt_lines):
        raise ValueError(
            f"paired files disagree: {len(src_lines)} input vs {len(tgt_lines)} target lines"
        )
    pairs = []
    skipped = 0
    for s, t in zip(src_lines, tgt_lines):
        src = src_vocab.encode(s.split()) + [EOS]
        tgt = tgt_vocab.encode(t.split()) + [EOS]
        if max_len is not None and (len(src) > max_len or len(tgt) + 1 > max_len):
            skipped += 1
            continue
        pairs.append(Pair(src, tgt))
    return PairDataset(pairs, skipped)


def collate(pairs: List[Pair]) -> Tuple[torch.Tensor, ...]:
    """Pad a batch; returns (src, tgt_in, tgt_out, src_pad_mask, tgt_pad_mask)."""
    src_len = max(len(p.src) for p in pairs)
    tgt_len = max(len(p.tgt) for p in pairs)
    n = len(pairs)
    src = torch.full((n, src_len), PAD, dtype=torch.long)
    tgt_in = torch.full((n, tgt_len), PAD, dtype=torch.long)
    tgt_out = torch.full((n, tgt_len), PAD, dtype=torch.long)
    for i, p in enumerate(pairs):
        src[i, : len(p.src)] = torch.tensor(p.src)
        tgt_in[i, 0] = BOS
        tgt_in[i, 1: len(p.tgt)] = torch.tensor(p.tgt[:-1])
        tgt_out[i, : len(p.tgt)] = torch.tensor(p.tgt)
    return src, tgt_in, tgt_out, src.eq(PAD), tgt_in.eq(PAD)


def batches(dataset: PairDataset, batch_size: int, generator: torch.Generator):
    """One shuffled epoch of padded batches."""
    order = torch.randperm(len(dataset.pairs), generator=generator).tolist()
    for i in range(0, len(order), batch_size):
        yield collate([dataset.pairs[j] for j in order[i: i + batch_size]])
