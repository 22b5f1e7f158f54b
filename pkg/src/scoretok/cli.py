"""Command-line entry point for the whole pipeline.

One subcommand per pipeline stage: tokenize, detokenize, validate,
downconvert, perturb, corpus-split, build-pairs, evaluate, stats, vocab,
and synth. Token files are line-oriented (one sequence per line); all
diagnostics go to stderr as one-line JSON records; every command is
deterministic for a fixed seed, and worker parallelism never reorders
output.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import corpus as corpus_mod
from . import metric as metric_mod
from .musicxml import MusicXmlError, collect_system_breaks, emit_musicxml, parse_musicxml
from .notelevel import (
    PerturbParams,
    downconvert,
    perturb,
    snap_to_grid,
    tokenize_notelevel,
    write_midi,
)
from .synth import SynthStyle, random_song
from .tokens import (
    CONCATENATED,
    REGULAR,
    TokenSeq,
    detokenize,
    tokenize_score,
    validate_tokens,
    vocabulary,
)

SCORE_SUFFIXES = (".musicxml", ".xml", ".mxl")


def _diag(**fields):
    print(json.dumps(fields), file=sys.stderr)


def _expand_inputs(paths) -> list:
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(x for x in p.iterdir() if x.suffix in SCORE_SUFFIXES))
        else:
            out.append(p)
    return out


def _default_jobs() -> int:
    return int(os.environ.get("SCORETOK_JOBS", "1"))


def _pmap(worker, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(worker, items))
    return [worker(item) for item in items]


# --- workers (module-level for pickling) ------------------------------------

def _w_tokenize(item):
    path, form = item
    try:
        score, warnings = parse_musicxml(path)
        line = tokenize_score(score, form).text()
        return ("ok", line, warnings)
    except Exception as exc:
        return ("error", f"{type(exc).__name__}: {exc}", [])


def _w_downconvert(item):
    path, emit_beats, midi_dir, perturb_fields = item
    try:
        score, warnings = parse_musicxml(path)
        nl = downconvert(score)
        if perturb_fields is not None:
            nl = snap_to_grid(perturb(nl, PerturbParams(**perturb_fields)))
        if midi_dir is not None:
            write_midi(nl, Path(midi_dir) / (Path(path).stem + ".mid"))
        line = tokenize_notelevel(nl, emit_beats=emit_beats).text()
        return ("ok", line, warnings)
    except Exception as exc:
        return ("error", f"{type(exc).__name__}: {exc}", [])


def _w_evaluate(item):
    orig_path, gen_path = item
    try:
        orig, _ = parse_musicxml(orig_path)
        gen, _ = parse_musicxml(gen_path)
        report = metric_mod.evaluate(orig, gen)
        return ("ok", report)
    except Exception as exc:
        return ("error", f"{type(exc).__name__}: {exc}")


# --- subcommands -------------------------------------------------------------

def cmd_tokenize(args) -> int:
    inputs = _expand_inputs(args.inputs)
    results = _pmap(_w_tokenize, [(str(p), args.form) for p in inputs], args.jobs)
    failures = 0
    lines = []
    for path, result in zip(inputs, results):
        if result[0] == "error":
            failures += 1
            _diag(file=str(path), error=result[1])
            continue
        for w in result[2]:
            _diag(file=str(path), warning=w)
        lines.append(result[1])
    Path(args.output).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return 1 if failures else 0


def cmd_detokenize(args) -> int:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    dirty = 0
    for i, line in enumerate(lines):
        seq = TokenSeq.from_text(line, form=args.form)
        score, report = detokenize(seq)
        if not report.ok:
            dirty += 1
            for entry in report.entries:
                _diag(line=i, kind=entry.kind, index=entry.index, detail=entry.detail)
        out = outdir / f"{i:04d}.musicxml"
        out.write_bytes(emit_musicxml(score, strict=False))
    rate = 100.0 * dirty / len(lines) if lines else 0.0
    print(f"format-error rate: {rate:.2f}% ({dirty} of {len(lines)} lines needed recovery)")
    return 0


def cmd_validate(args) -> int:
    dirty = 0
    lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines):
        report = validate_tokens(TokenSeq.from_text(line, form=args.form))
        if not report.ok:
            dirty += 1
            if args.report == "json":
                print(json.dumps({
                    "line": i,
                    "errors": [
                        {"kind": e.kind, "index": e.index, "detail": e.detail}
                        for e in report.entries
                    ],
                }))
            else:
                for e in report.entries:
                    print(f"line {i}: {e.render()}")
    rate = 100.0 * dirty / len(lines) if lines else 0.0
    print(f"format-error rate: {rate:.2f}% ({dirty} of {len(lines)} lines)")
    return 1 if dirty else 0


def _perturb_fields(args, seed):
    return {
        "onset_sigma": args.onset_sigma,
        "dur_mu": args.dur_mu,
        "dur_sigma": args.dur_sigma,
        "seed": seed,
    }


def cmd_downconvert(args) -> int:
    inputs = _expand_inputs(args.inputs)
    if args.midi_dir:
        Path(args.midi_dir).mkdir(parents=True, exist_ok=True)
    items = [
        (str(p), not args.no_beat_tokens, args.midi_dir, None) for p in inputs
    ]
    return _run_downconvert(args, inputs, items)


def cmd_perturb(args) -> int:
    inputs = _expand_inputs(args.inputs)
    # Per-file seeds derive from the base seed and the input position, so a
    # fixed seed reproduces the file and parallelism cannot reorder noise.
    items = [
        (
            str(p),
            not args.no_beat_tokens,
            None,
            _perturb_fields(args, args.seed ^ zlib.crc32(str(i).encode())),
        )
        for i, p in enumerate(inputs)
    ]
    return _run_downconvert(args, inputs, items)


def _run_downconvert(args, inputs, items) -> int:
    results = _pmap(_w_downconvert, items, args.jobs)
    failures = 0
    lines = []
    for path, result in zip(inputs, results):
        if result[0] == "error":
            failures += 1
            _diag(file=str(path), error=result[1])
            continue
        for w in result[2]:
            _diag(file=str(path), warning=w)
        lines.append(result[1])
    Path(args.output).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return 1 if failures else 0


def cmd_corpus_split(args) -> int:
    songs = [p.stem for p in _expand_inputs([args.songs])]
    ratios = tuple(int(x) for x in args.ratios.split(":"))
    manifest = corpus_mod.split_songs(songs, ratios=ratios, seed=args.seed)
    Path(args.output).write_text(manifest.to_json(), encoding="utf-8")
    counts = {s: sum(1 for v in manifest.songs.values() if v == s) for s in corpus_mod.SPLITS}
    print(f"split {len(manifest.songs)} songs: {counts}")
    return 0


def cmd_build_pairs(args) -> int:
    manifest = corpus_mod.CorpusManifest.from_json(
        Path(args.manifest).read_text(encoding="utf-8")
    )
    song_dir = Path(args.songs)
    scores = {}
    breaks = {} if args.system_marks else None
    failures = 0
    for song in sorted(manifest.songs):
        path = next(
            (song_dir / f"{song}{suffix}" for suffix in SCORE_SUFFIXES
             if (song_dir / f"{song}{suffix}").exists()),
            None,
        )
        if path is None:
            _diag(song=song, error="no score file found")
            failures += 1
            continue
        try:
            scores[song], _ = parse_musicxml(path)
            if breaks is not None:
                breaks[song] = collect_system_breaks(path)
        except MusicXmlError as exc:
            _diag(song=song, error=str(exc))
            failures += 1
    if failures:
        return 1
    perturb_params = (
        PerturbParams(**_perturb_fields(args, args.seed)) if args.perturb else None
    )
    manifest = corpus_mod.build_pairs(
        scores,
        manifest,
        args.output,
        form=args.form,
        measures=None if args.system_marks else args.slice_measures,
        system_breaks=breaks,
        perturb_params=perturb_params,
        emit_beats=not args.no_beat_tokens,
    )
    for entry in manifest.skipped:
        _diag(**entry)
    print(f"built {len(manifest.slices)} pairs ({len(manifest.skipped)} slices skipped)")
    return 0


def cmd_evaluate(args) -> int:
    orig_dir, gen_dir = Path(args.orig), Path(args.gen)
    orig_files = {p.name: p for p in _expand_inputs([orig_dir])}
    gen_files = {p.name: p for p in _expand_inputs([gen_dir])}
    unmatched = sorted(set(orig_files) ^ set(gen_files))
    for name in unmatched:
        _diag(file=name, error="missing from one directory")
    names = sorted(set(orig_files) & set(gen_files))
    results = _pmap(
        _w_evaluate, [(str(orig_files[n]), str(gen_files[n])) for n in names], args.jobs
    )
    failures = len(unmatched)
    pairs = {}
    reports = []
    for name, result in zip(names, results):
        if result[0] == "error":
            failures += 1
            _diag(file=name, error=result[1])
            continue
        pairs[name] = result[1].to_dict()
        reports.append(result[1])
    payload = {"pairs": pairs}
    if reports:
        payload["aggregate"] = metric_mod.aggregate(reports).to_dict()
    text = json.dumps(payload, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    if args.report == "json" or not args.output:
        print(text)
    elif reports:
        agg = payload["aggregate"]
        print(f"aggregate average error: {agg['average']}% over {len(reports)} pairs")
    return 1 if failures else 0


def _line_lengths(path) -> list:
    return [
        len(line.split()) for line in Path(path).read_text(encoding="utf-8").splitlines()
    ]


def _stats_of(lengths) -> dict:
    if not lengths:
        return {"lines": 0, "mean": 0.0, "std": 0.0, "min": 0, "max": 0}
    return {
        "lines": len(lengths),
        "mean": statistics.mean(lengths),
        "std": statistics.pstdev(lengths),
        "min": min(lengths),
        "max": max(lengths),
    }


def cmd_stats(args) -> int:
    out = {}
    for path in args.inputs:
        out[str(path)] = _stats_of(_line_lengths(path))
    if args.pair:
        a, b = args.pair
        mean_a = _stats_of(_line_lengths(a))["mean"]
        mean_b = _stats_of(_line_lengths(b))["mean"]
        out["length_ratio"] = (mean_b / mean_a) if mean_a else None
    if args.report == "json":
        print(json.dumps(out, indent=2))
    else:
        for name, st in out.items():
            if name == "length_ratio":
                print(f"length ratio (second/first): {st:.4f}" if st else "length ratio: n/a")
            else:
                print(
                    f"{name}: {st['lines']} lines, mean {st['mean']:.2f} "
                    f"± {st['std']:.2f}, min {st['min']}, max {st['max']}"
                )
    return 0


def cmd_vocab(args) -> int:
    tokens = vocabulary(args.form)
    text = "".join(t + "\n" for t in tokens)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"{len(tokens)} tokens")
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth(args) -> int:
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    style = {
        "popular": SynthStyle.popular,
        "sparse": SynthStyle.sparse,
        "basic": SynthStyle,
    }[args.style]()
    for i in range(args.songs):
        score = random_song(args.seed + i, n_measures=args.measures, style=style)
        (outdir / f"song{i:03d}.musicxml").write_bytes(emit_musicxml(score))
    print(f"wrote {args.songs} scores to {outdir}")
    return 0


# --- argument wiring ----------------------------------------------------------

def _add_form(p):
    p.add_argument("--form", choices=(REGULAR, CONCATENATED), default=REGULAR,
                   help="score token form")


def _add_jobs(p):
    p.add_argument("--jobs", type=int, default=_default_jobs(),
                   help="worker processes ($SCORETOK_JOBS overrides)")


def _add_perturb_params(p):
    p.add_argument("--onset-sigma", type=float, default=0.08,
                   help="sigma of the onset noise distribution")
    p.add_argument("--dur-mu", type=float, default=0.8,
                   help="mean of the duration noise distribution")
    p.add_argument("--dur-sigma", type=float, default=0.24,
                   help="sigma of the duration noise distribution")


def _add_report(p):
    p.add_argument("--report", choices=("json", "text"), default="text",
                   help="report format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scoretok",
        description="Piano-score tokenization pipeline: notation-level and "
                    "note-level token codecs, corpus building, and evaluation.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    class _Sub:
        # every subcommand's --help lists each flag with its default
        def add_parser(self, *a, **kw):
            kw.setdefault("formatter_class", argparse.ArgumentDefaultsHelpFormatter)
            return subparsers.add_parser(*a, **kw)

    sub = _Sub()

    p = sub.add_parser("tokenize", help="MusicXML files to score-token lines")
    p.add_argument("inputs", nargs="+", help="MusicXML files or directories")
    p.add_argument("-o", "--output", required=True, help="output token file")
    _add_form(p)
    _add_jobs(p)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("detokenize", help="token lines to MusicXML files (with recovery)")
    p.add_argument("input", help="token file, one sequence per line")
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_form(p)
    p.set_defaults(func=cmd_detokenize)

    p = sub.add_parser("validate", help="report format errors in token lines")
    p.add_argument("input", help="token file")
    _add_form(p)
    _add_report(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("downconvert", help="MusicXML to note-level token lines")
    p.add_argument("inputs", nargs="+", help="MusicXML files or directories")
    p.add_argument("-o", "--output", required=True, help="output token file")
    p.add_argument("--no-beat-tokens", action="store_true",
                   help="plain-REMI mode: measure offsets from the bar only")
    p.add_argument("--midi-dir", help="also write one format-0 MIDI file per input")
    _add_jobs(p)
    p.set_defaults(func=cmd_downconvert)

    p = sub.add_parser("perturb", help="downconvert with unquantized-input noise")
    p.add_argument("inputs", nargs="+", help="MusicXML files or directories")
    p.add_argument("-o", "--output", required=True, help="output token file")
    p.add_argument("--no-beat-tokens", action="store_true",
                   help="plain-REMI mode: measure offsets from the bar only")
    p.add_argument("--seed", type=int, default=0, help="base noise seed")
    _add_perturb_params(p)
    _add_jobs(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("corpus-split", help="song-wise train/validation/test split")
    p.add_argument("songs", help="directory of per-song MusicXML files")
    p.add_argument("-o", "--output", required=True, help="manifest JSON path")
    p.add_argument("--seed", type=int, default=0, help="shuffle seed")
    p.add_argument("--ratios", default="8:1:1", help="train:validation:test")
    p.set_defaults(func=cmd_corpus_split)

    p = sub.add_parser("build-pairs", help="materialize paired token files per split")
    p.add_argument("--manifest", required=True, help="split manifest JSON")
    p.add_argument("--songs", required=True, help="directory of per-song MusicXML files")
    p.add_argument("-o", "--output", required=True, help="corpus output directory")
    _add_form(p)
    p.add_argument("--slice-measures", type=int, default=4,
                   help="measures per slice (fixed policy)")
    p.add_argument("--system-marks", action="store_true",
                   help="slice at print/system-break marks instead of a fixed count")
    p.add_argument("--no-beat-tokens", action="store_true",
                   help="plain-REMI note-level inputs")
    p.add_argument("--perturb", action="store_true",
                   help="add unquantized-input noise to the inputs")
    p.add_argument("--seed", type=int, default=0, help="base noise seed")
    _add_perturb_params(p)
    p.set_defaults(func=cmd_build_pairs)

    p = sub.add_parser("evaluate", help="12-aspect note-wise comparison of score dirs")
    p.add_argument("--orig", required=True, help="directory of original scores")
    p.add_argument("--gen", required=True, help="directory of generated scores")
    p.add_argument("-o", "--output", help="write the JSON report here")
    _add_report(p)
    _add_jobs(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="token-length statistics of token files")
    p.add_argument("inputs", nargs="*", help="token files")
    p.add_argument("--pair", nargs=2, metavar=("REGULAR", "CONCATENATED"),
                   help="also print the mean-length ratio of two files")
    _add_report(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("vocab", help="print the closed token vocabulary")
    _add_form(p)
    p.add_argument("-o", "--output", help="write the vocabulary here")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("synth", help="write random valid scores (demo corpus)")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--songs", type=int, default=10, help="number of scores")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--measures", type=int, default=8, help="measures per score")
    p.add_argument("--style", choices=("basic", "popular", "sparse"), default="basic",
                   help="event-mix preset")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
