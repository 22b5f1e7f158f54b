"""Vanilla encoder-decoder Transformer for token-sequence restoration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch
from torch import nn


@dataclass
class ModelConfig:
    """Production defaults: d_model 256, d_ff 512, 4 heads, 3+3 layers,
    dropout 0.2 (about 4M parameters at desk-scale vocabulary sizes)."""

    src_vocab: int
    tgt_vocab: int
    d_model: int = 256
    d_ff: int = 512
    heads: int = 4
    layers: int = 3
    dropout: float = 0.2
    max_len: int = 1024


class PositionalEncoding(nn.Module):
    def __init__(self, d_model: int, max_len: int, dropout: float):
        super().__init__()
        self.dropout = nn.Dropout(dropout)
        pe = torch.zeros(max_len, d_model)
        position = torch.arange(max_len).unsqueeze(1).float()
        div = torch.exp(torch.arange(0, d_model, 2).float() * (-math.log(10000.0) / d_model))
        pe[:, 0::2] = torch.sin(position * div)
        pe[:, 1::2] = torch.cos(position * div)
        self.register_buffer("pe", pe.unsqueeze(0))

    def forward(self, x):
        return self.dropout(x + self.pe[:, : x.size(1)])


class Seq2SeqTransformer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.src_embed = nn.Embedding(config.src_vocab, config.d_model)
        self.tgt_embed = nn.Embedding(config.tgt_vocab, config.d_model)
        self.positional = PositionalEncoding(config.d_model, config.max_len, config.dropout)
        self.transformer = nn.Transformer(
            d_model=config.d_model,
            nhead=config.heads,
            num_encoder_layers=config.layers,
            num_decoder_layers=config.layers,
            dim_feedforward=config.d_ff,
            dropout=config.dropout,
            batch_first=True,
        )
        self.generator = nn.Linear(config.d_model, config.tgt_vocab)
        self.scale = math.sqrt(config.d_model)

    def encode(self, src, src_pad_mask):
        x = self.positional(self.src_embed(src) * self.scale)
        return self.transformer.encoder(x, src_key_padding_mask=src_pad_mask)

    def decode(self, memory, tgt_in, src_pad_mask, tgt_pad_mask):
        y = self.positional(self.tgt_embed(tgt_in) * self.scale)
        causal = causal_mask(tgt_in.size(1), tgt_in.device)
        out = self.transformer.decoder(
            y,
            memory,
            tgt_mask=causal,
            tgt_key_padding_mask=tgt_pad_mask,
            memory_key_padding_mask=src_pad_mask,
        )
        return self.generator(out)

    def forward(self, src, tgt_in, src_pad_mask=None, tgt_pad_mask=None):
        memory = self.encode(src, src_pad_mask)
        return self.decode(memory, tgt_in, src_pad_mask, tgt_pad_mask)


def causal_mask(n: int, device=None) -> torch.Tensor:
    """Float mask with -inf above the diagonal: position t sees only <= t."""
    return torch.triu(torch.full((n, n), float("-inf"), device=device), diagonal=1)


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
