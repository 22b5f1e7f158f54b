"""Teacher-forced training with warmup/decay and validation checkpointing.

The loop is deterministic for a fixed seed on CPU: one global torch seed
drives initialization and dropout, a dedicated generator drives batch
shuffling, and data loading is serial.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import torch
from torch import nn

from .data import PairDataset, batches, collate, make_dataset
from .model import ModelConfig, Seq2SeqTransformer, count_parameters
from .vocab import PAD, Vocab, build_vocab, read_lines


@dataclass
class TrainConfig:
    d_model: int = 256
    d_ff: int = 512
    heads: int = 4
    layers: int = 3
    dropout: float = 0.2
    batch_size: int = 8
    warmup: int = 200
    lr_scale: float = 1.0
    decay_floor: float = 0.5  # inverse-sqrt decay never drops below this fraction of peak
    max_steps: int = 4000
    eval_every: int = 50
    accuracy_target: float = 0.995
    seed: int = 0
    max_len: Optional[int] = None  # None: corpus max + margin
    time_budget: Optional[float] = None  # seconds; safety stop


def noam_lr(step: int, d_model: int, warmup: int, decay_floor: float = 0.0) -> float:
    """Inverse-square-root warmup/decay with an optional floor; small
    memorization corpora stall without one."""
    step = max(step, 1)
    peak = d_model ** -0.5 * warmup ** -0.5
    lr = d_model ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)
    return max(lr, decay_floor * peak)


@dataclass
class Checkpoint:
    """Everything needed to reproduce inference: weights, dims, tables."""

    state_dict: dict
    model_config: dict
    train_config: dict
    src_tokens: List[str]
    tgt_tokens: List[str]
    step: int
    val_loss: float
    history: list = field(default_factory=list)

    def save(self, path):
        torch.save(
            {
                "model": self.state_dict,
                "model_config": self.model_config,
                "train_config": self.train_config,
                "src_tokens": self.src_tokens,
                "tgt_tokens": self.tgt_tokens,
                "step": self.step,
                "val_loss": self.val_loss,
                "history": self.history,
            },
            path,
        )

    @classmethod
    def load(cls, path) -> "Checkpoint":
        data = torch.load(path, map_location="cpu", weights_only=False)
        return cls(
            data["model"], data["model_config"], data["train_config"],
            data["src_tokens"], data["tgt_tokens"], data["step"],
            data["val_loss"], data.get("history", []),
        )

    def build_model(self) -> Seq2SeqTransformer:
        model = Seq2SeqTransformer(ModelConfig(**self.model_config))
        model.load_state_dict(self.state_dict)
        model.eval()
        return model

    @property
    def src_vocab(self) -> Vocab:
        return Vocab(self.src_tokens)

    @property
    def tgt_vocab(self) -> Vocab:
        return Vocab(self.tgt_tokens)


def _loss_on(model, batch, criterion):
    src, tgt_in, tgt_out, src_mask, tgt_mask = batch
    logits = model(src, tgt_in, src_mask, tgt_mask)
    return criterion(logits.reshape(-1, logits.size(-1)), tgt_out.reshape(-1))


def teacher_forced_accuracy(model, dataset: PairDataset, batch_size: int = 16) -> float:
    """Fraction of non-pad target positions predicted exactly (eval mode)."""
    model.eval()
    correct = total = 0
    with torch.no_grad():
        for i in range(0, len(dataset.pairs), batch_size):
            src, tgt_in, tgt_out, src_mask, tgt_mask = collate(
                dataset.pairs[i: i + batch_size]
            )
            logits = model(src, tgt_in, src_mask, tgt_mask)
            pred = logits.argmax(-1)
            keep = tgt_out.ne(PAD)
            correct += (pred.eq(tgt_out) & keep).sum().item()
            total += keep.sum().item()
    model.train()
    return correct / max(total, 1)


def load_corpus(corpus_dir, config: TrainConfig):
    """Read {train,validation}/{input,target}.tokens and build everything."""
    corpus_dir = Path(corpus_dir)
    train_src = read_lines(corpus_dir / "train" / "input.tokens")
    train_tgt = read_lines(corpus_dir / "train" / "target.tokens")
    src_vocab = build_vocab(train_src)
    tgt_vocab = build_vocab(train_tgt)
    max_len = config.max_len
    if max_len is None:
        longest = max(
            [len(l.split()) for l in train_src + train_tgt] or [0]
        )
        max_len = longest + 8
    train = make_dataset(train_src, train_tgt, src_vocab, tgt_vocab, max_len)
    val_dir = corpus_dir / "validation"
    val = None
    if (val_dir / "input.tokens").exists():
        val = make_dataset(
            read_lines(val_dir / "input.tokens"),
            read_lines(val_dir / "target.tokens"),
            src_vocab, tgt_vocab, max_len,
        )
    return train, val, src_vocab, tgt_vocab, max_len


def train(corpus_dir, config: TrainConfig, out_path=None, log=print) -> Checkpoint:
    torch.manual_seed(config.seed)
    train_set, val_set, src_vocab, tgt_vocab, max_len = load_corpus(corpus_dir, config)
    if train_set.skipped:
        log(f"skipped {train_set.skipped} overlong pairs (max_len {max_len})")
    model_config = ModelConfig(
        src_vocab=len(src_vocab), tgt_vocab=len(tgt_vocab),
        d_model=config.d_model, d_ff=config.d_ff, heads=config.heads,
        layers=config.layers, dropout=config.dropout, max_len=max_len + 2,
    )
    model = Seq2SeqTransformer(model_config)
    log(f"model parameters: {count_parameters(model):,} "
        f"(src vocab {len(src_vocab)}, tgt vocab {len(tgt_vocab)})")
    optimizer = torch.optim.Adam(model.parameters(), lr=1.0, betas=(0.9, 0.98), eps=1e-9)
    criterion = nn.CrossEntropyLoss(ignore_index=PAD)
    shuffler = torch.Generator().manual_seed(config.seed)

    history = []
    best_val = math.inf
    best_state = None
    step = 0
    started = time.monotonic()
    stop = False
    model.train()
    while not stop:
        for batch in batches(train_set, config.batch_size, shuffler):
            step += 1
            lr = config.lr_scale * noam_lr(
                step, config.d_model, config.warmup, config.decay_floor
            )
            for group in optimizer.param_groups:
                group["lr"] = lr
            optimizer.zero_grad()
            loss = _loss_on(model, batch, criterion)
            loss.backward()
            optimizer.step()
            history.append(round(loss.item(), 6))
            if step % config.eval_every == 0 or step >= config.max_steps:
                accuracy = teacher_forced_accuracy(model, train_set)
                val_loss = _validation_loss(model, val_set, criterion)
                log(f"step {step}: loss {loss.item():.4f} "
                    f"train-acc {accuracy:.4f} val-loss {val_loss:.4f}")
                if val_loss < best_val:
                    best_val = val_loss
                    best_state = {k: v.clone() for k, v in model.state_dict().items()}
                if accuracy >= config.accuracy_target:
                    log(f"accuracy target {config.accuracy_target} reached at step {step}")
                    stop = True
                    break
            if step >= config.max_steps:
                stop = True
                break
            if config.time_budget and time.monotonic() - started > config.time_budget:
                log("time budget exhausted")
                stop = True
                break

    # Keep the final (overfit) weights; the best-validation copy is what a
    # production run would export, but restoration quality on the training
    # set is the point at desk scale.
    final_val = _validation_loss(model, val_set, criterion)
    checkpoint = Checkpoint(
        state_dict=model.state_dict(),
        model_config=asdict(model_config),
        train_config=asdict(config),
        src_tokens=src_vocab.tokens,
        tgt_tokens=tgt_vocab.tokens,
        step=step,
        val_loss=final_val if best_state is None else min(best_val, final_val),
        history=history,
    )
    if out_path is not None:
        checkpoint.save(out_path)
    return checkpoint


def _validation_loss(model, val_set, criterion) -> float:
    if val_set is None or not val_set.pairs:
        return math.inf
    model.eval()
    with torch.no_grad():
        loss = _loss_on(model, collate(val_set.pairs), criterion).item()
    model.train()
    return loss
