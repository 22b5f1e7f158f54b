"""Decoding: batched greedy by default, per-line beam search on request."""

from __future__ import annotations

import sys
from typing import List, Optional

import torch

from .data import PairDataset
from .train import Checkpoint
from .vocab import BOS, EOS, PAD, Vocab


def _encode_sources(lines: List[str], vocab: Vocab):
    unk_warned = set()
    encoded = []
    for line in lines:
        tokens = line.split()
        for t in vocab.unk_tokens(tokens):
            if t not in unk_warned:
                unk_warned.add(t)
                print(f'{{"warning": "out-of-vocabulary input token", "token": "{t}"}}',
                      file=sys.stderr)
        encoded.append(vocab.encode(tokens) + [EOS])
    return encoded


def greedy_decode(model, src_ids: List[List[int]], max_len: int) -> List[List[int]]:
    """Decode a whole batch in lockstep until every row has emitted EOS."""
    n = len(src_ids)
    src_len = max(len(s) for s in src_ids)
    src = torch.full((n, src_len), PAD, dtype=torch.long)
    for i, s in enumerate(src_ids):
        src[i, : len(s)] = torch.tensor(s)
    src_mask = src.eq(PAD)
    with torch.no_grad():
        memory = model.encode(src, src_mask)
        out = torch.full((n, 1), BOS, dtype=torch.long)
        finished = torch.zeros(n, dtype=torch.bool)
        for _ in range(max_len):
            logits = model.decode(memory, out, src_mask, None)
            nxt = logits[:, -1].argmax(-1)
            nxt[finished] = PAD
            out = torch.cat([out, nxt.unsqueeze(1)], dim=1)
            finished |= nxt.eq(EOS)
            if finished.all():
                break
    results = []
    for row in out[:, 1:].tolist():
        ids = []
        for t in row:
            if t == EOS:
                break
            ids.append(t)
        results.append(ids)
    return results


def beam_decode(model, src_ids: List[int], max_len: int, beam: int) -> List[int]:
    """Standard length-normalized beam search for one line."""
    src = torch.tensor(src_ids, dtype=torch.long).unsqueeze(0)
    src_mask = src.eq(PAD)
    with torch.no_grad():
        memory = model.encode(src, src_mask)
        hyps = [([BOS], 0.0, False)]
        for _ in range(max_len):
            if all(done for _, _, done in hyps):
                break
            expanded = []
            for ids, score, done in hyps:
                if done:
                    expanded.append((ids, score, done))
                    continue
                out = torch.tensor(ids, dtype=torch.long).unsqueeze(0)
                logits = model.decode(memory, out, src_mask, None)
                logprobs = torch.log_softmax(logits[0, -1], dim=-1)
                top = torch.topk(logprobs, beam)
                for lp, tok in zip(top.values.tolist(), top.indices.tolist()):
                    expanded.append((ids + [tok], score + lp, tok == EOS))
            expanded.sort(key=lambda h: h[1] / len(h[0]), reverse=True)
            hyps = expanded[:beam]
    best = max(hyps, key=lambda h: h[1] / len(h[0]))[0][1:]
    return best[:-1] if best and best[-1] == EOS else best


def generate_lines(
    checkpoint: Checkpoint,
    lines: List[str],
    *,
    beam: int = 1,
    max_len: Optional[int] = None,
    batch_size: int = 16,
) -> List[str]:
    """Decode input lines to output lines; an empty input stays empty."""
    model = checkpoint.build_model()
    src_vocab = checkpoint.src_vocab
    tgt_vocab = checkpoint.tgt_vocab
    cap = max_len or checkpoint.model_config["max_len"] - 2

    outputs: List[Optional[str]] = [None] * len(lines)
    todo = [i for i, line in enumerate(lines) if line.strip()]
    for i in range(len(lines)):
        if i not in todo:
            outputs[i] = ""
    encoded = _encode_sources([lines[i] for i in todo], src_vocab)
    if beam > 1:
        for pos, ids in zip(todo, encoded):
            outputs[pos] = " ".join(tgt_vocab.decode(beam_decode(model, ids, cap, beam)))
    else:
        for start in range(0, len(todo), batch_size):
            chunk = todo[start: start + batch_size]
            decoded = greedy_decode(model, encoded[start: start + batch_size], cap)
            for pos, ids in zip(chunk, decoded):
                outputs[pos] = " ".join(tgt_vocab.decode(ids))
    return [o if o is not None else "" for o in outputs]
