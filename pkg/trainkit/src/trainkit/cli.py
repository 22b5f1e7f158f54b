"""Command line: train on a paired-token corpus, generate from a checkpoint."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .generate import generate_lines
from .model import Seq2SeqTransformer, ModelConfig, count_parameters
from .train import Checkpoint, TrainConfig, train
from .vocab import build_vocab, read_lines


def cmd_train(args) -> int:
    config = TrainConfig(
        batch_size=args.batch_size,
        max_steps=args.max_steps,
        warmup=args.warmup,
        seed=args.seed,
        accuracy_target=args.accuracy_target,
        time_budget=args.time_budget,
        dropout=args.dropout,
    )
    checkpoint = train(args.corpus, config, args.output)
    print(f"saved checkpoint at step {checkpoint.step} to {args.output}")
    return 0


def cmd_generate(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    lines = read_lines(args.input)
    outputs = generate_lines(
        checkpoint, lines, beam=args.beam, max_len=args.max_len
    )
    Path(args.output).write_text(
        "".join(line + "\n" for line in outputs), encoding="utf-8"
    )
    return 0


def cmd_info(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    model = checkpoint.build_model()
    print(json.dumps({
        "step": checkpoint.step,
        "val_loss": checkpoint.val_loss,
        "parameters": count_parameters(model),
        "src_vocab": len(checkpoint.src_tokens),
        "tgt_vocab": len(checkpoint.tgt_tokens),
        "model_config": checkpoint.model_config,
        "train_config": checkpoint.train_config,
    }, indent=2))
    return 0


def cmd_build_vocab(args) -> int:
    extra = read_lines(args.extra) if args.extra else None
    vocab = build_vocab(read_lines(args.input), extra)
    Path(args.output).write_text(json.dumps(vocab.tokens), encoding="utf-8")
    print(f"{len(vocab)} tokens")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trainkit",
        description="Sequence-to-sequence restoration of score tokens from "
                    "note-level tokens.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a {train,validation}/ paired corpus")
    p.add_argument("corpus", help="corpus directory with per-split token files")
    p.add_argument("-o", "--output", required=True, help="checkpoint path")
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--max-steps", type=int, default=4000)
    p.add_argument("--warmup", type=int, default=200)
    p.add_argument("--dropout", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--accuracy-target", type=float, default=0.995)
    p.add_argument("--time-budget", type=float, default=None,
                   help="stop after this many seconds")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="decode an input token file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--beam", type=int, default=1, help="beam width (1 = greedy)")
    p.add_argument("--max-len", type=int, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("info", help="print checkpoint metadata as JSON")
    p.add_argument("checkpoint")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("build-vocab", help="write a token table as JSON")
    p.add_argument("--input", required=True, help="token file")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--extra", help="token inventory file to merge (one per line)")
    p.set_defaults(func=cmd_build_vocab)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
