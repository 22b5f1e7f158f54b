"""Desk-scale encoder-decoder Transformer for score-token restoration.

Consumes and produces the line-oriented token files of the companion
tokenization toolkit; the file formats are the only coupling.
"""

from .data import PairDataset, collate, make_dataset
from .generate import beam_decode, generate_lines, greedy_decode
from .model import ModelConfig, Seq2SeqTransformer, causal_mask, count_parameters
from .train import Checkpoint, TrainConfig, teacher_forced_accuracy, train
from .vocab import BOS, EOS, PAD, UNK, Vocab, build_vocab

__version__ = "0.1.0"
