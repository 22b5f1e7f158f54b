"""Dataset construction: slicing scores, song-wise splits, paired files.

Songs are segmented into contiguous slices (system-break marks or a fixed
measure count), each slice re-rooted with the clef/key/time in effect at
its start and with boundary-crossing ties split so every slice stands
alone. The song-wise 8:1:1 split and the paired note-level/score-level
token files rebuild byte-identically from the manifest's seed.
"""

from __future__ import annotations

import json
import random
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .notelevel import (
    DanglingTieError,
    OffGridError,
    PerturbParams,
    downconvert,
    perturb,
    snap_to_grid,
    tokenize_notelevel,
)
from .score import (
    Measure,
    NoteEvent,
    Score,
    StaffAttributes,
    VoiceSeg,
    measure_capacity,
    staff_attribute_timeline,
    validate_score,
)
from .tokens import REGULAR, TokenSeq, VocabularyError, tokenize_score

SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class SystemSlice:
    song: str
    index: int
    start: int
    end: int
    score: Score


def _slice_starts(n_measures: int, measures: Optional[int], system_breaks) -> List[int]:
    if measures is not None:
        if measures <= 0:
            raise ValueError("measures per slice must be positive")
        return list(range(0, n_measures, measures))
    starts = sorted({b for b in system_breaks if 0 < b < n_measures})
    return [0] + starts


def _fix_first_measure_ties(measure: Measure) -> Measure:
    """Events at onset 0 whose tie refers across the cut: continue becomes
    start, stop is dropped."""
    voices = []
    for voice in measure.voices:
        events = list(voice.events)
        for i, ev in enumerate(events):
            if i == 0 and isinstance(ev, NoteEvent) and ev.tie in ("continue", "stop"):
                events[i] = replace(ev, tie="start" if ev.tie == "continue" else None)
        voices.append(VoiceSeg(tuple(events)))
    return Measure(voices, measure.clef_change, measure.key_change, measure.time_change)


def _fix_last_measure_ties(measure: Measure, capacity) -> Measure:
    """Events ending at the barline whose tie refers across the cut: start is
    dropped, continue becomes stop."""
    voices = []
    for voice in measure.voices:
        events = list(voice.events)
        pos = 0
        for i, ev in enumerate(events):
            end = pos + ev.duration
            if (
                end == capacity
                and isinstance(ev, NoteEvent)
                and ev.tie in ("start", "continue")
            ):
                events[i] = replace(ev, tie=None if ev.tie == "start" else "stop")
            pos = end
        voices.append(VoiceSeg(tuple(events)))
    return Measure(voices, measure.clef_change, measure.key_change, measure.time_change)


def _slice_staff(measures, attrs: StaffAttributes, start: int, end: int, has_tail: bool):
    timeline = list(staff_attribute_timeline(measures, attrs))
    _, clef, key, time = timeline[start]
    initial = StaffAttributes(clef, key, time)
    sub = []
    for i in range(start, end):
        m = measures[i]
        if i == start:
            m = Measure(m.voices)  # changes are folded into the slice initials
        sub.append(m)
    if start > 0 and sub:
        sub[0] = _fix_first_measure_ties(sub[0])
    if has_tail and sub:
        last_time = timeline[end - 1][3]
        sub[-1] = _fix_last_measure_ties(sub[-1], measure_capacity(last_time))
    return tuple(sub), initial


def segment(
    score: Score,
    song: str = "",
    *,
    measures: Optional[int] = None,
    system_breaks: Optional[Sequence[int]] = None,
) -> List[SystemSlice]:
    """Cut a score into contiguous, independently valid slices.

    Pass either ``measures`` (fixed slice length; the remainder forms a
    final short slice) or ``system_breaks`` (measure indices that start a
    new system).
    """
    if (measures is None) == (system_breaks is None):
        raise ValueError("pass exactly one of measures= or system_breaks=")
    n = len(score.right)
    if n == 0:
        return []
    starts = _slice_starts(n, measures, system_breaks or ())
    bounds = starts + [n]
    out = []
    for idx, (s, e) in enumerate(zip(bounds, bounds[1:])):
        right, right_attrs = _slice_staff(score.right, score.right_attrs, s, e, e < n)
        left, left_attrs = _slice_staff(score.left, score.left_attrs, s, e, e < n)
        out.append(
            SystemSlice(song, idx, s, e, Score(right, left, right_attrs, left_attrs))
        )
    return out


@dataclass
class CorpusManifest:
    seed: int
    ratios: tuple
    songs: Dict[str, str]
    slices: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def split_of(self, song: str) -> str:
        return self.songs[song]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "songs": dict(sorted(self.songs.items())),
            "slices": self.slices,
            "skipped": self.skipped,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CorpusManifest":
        data = json.loads(text)
        return cls(
            seed=data["seed"],
            ratios=tuple(data["ratios"]),
            songs=data["songs"],
            slices=data.get("slices", []),
            skipped=data.get("skipped", []),
        )


def split_songs(song_ids, ratios=(8, 1, 1), seed: int = 0) -> CorpusManifest:
    """Deterministic song-wise split; every split gets at least one song."""
    ids = sorted(set(song_ids))
    if len(ids) < len(SPLITS):
        raise ValueError(f"need at least {len(SPLITS)} songs, got {len(ids)}")
    rng = random.Random(seed)
    rng.shuffle(ids)
    total = sum(ratios)
    n = len(ids)
    n_val = max(1, round(n * ratios[1] / total))
    n_test = max(1, round(n * ratios[2] / total))
    n_train = n - n_val - n_test
    if n_train < 1:
        raise ValueError("fewer songs than splits")
    songs = {}
    for i, song in enumerate(ids):
        if i < n_train:
            songs[song] = "train"
        elif i < n_train + n_val:
            songs[song] = "validation"
        else:
            songs[song] = "test"
    return CorpusManifest(seed=seed, ratios=tuple(ratios), songs=songs)


def _slice_seed(base: int, song: str, index: int) -> int:
    return base ^ zlib.crc32(f"{song}:{index}".encode("utf-8"))


def build_pairs(
    scores: Dict[str, Score],
    manifest: CorpusManifest,
    outdir,
    *,
    form: str = REGULAR,
    measures: Optional[int] = 4,
    system_breaks: Optional[Dict[str, Sequence[int]]] = None,
    perturb_params: Optional[PerturbParams] = None,
    emit_beats: bool = True,
) -> CorpusManifest:
    """Materialize line-aligned input/target token files per split.

    Line i of ``{split}/input.tokens`` is the note-level tokenization of
    slice i (optionally perturbed then snapped), line i of
    ``{split}/target.tokens`` its score tokens. Slices that cannot be
    down-converted are skipped and recorded. Returns the manifest enriched
    with the slice inventory; also written as ``manifest.json``.
    """
    outdir = Path(outdir)
    manifest.slices = []
    manifest.skipped = []
    for split in SPLITS:
        split_dir = outdir / split
        split_dir.mkdir(parents=True, exist_ok=True)
        inputs, targets = [], []
        for song in sorted(s for s, sp in manifest.songs.items() if sp == split):
            score = scores[song]
            if system_breaks is not None:
                slices = segment(score, song, system_breaks=system_breaks.get(song, ()))
            else:
                slices = segment(score, song, measures=measures)
            for sl in slices:
                bad = validate_score(sl.score)
                if not bad.ok:
                    manifest.skipped.append(
                        {"song": song, "index": sl.index, "reason": bad.entries[0].render()}
                    )
                    continue
                try:
                    nl = downconvert(sl.score)
                    if perturb_params is not None:
                        params = replace(
                            perturb_params, seed=_slice_seed(perturb_params.seed, song, sl.index)
                        )
                        nl = snap_to_grid(perturb(nl, params))
                    input_seq = tokenize_notelevel(nl, emit_beats=emit_beats)
                    target_seq = tokenize_score(sl.score, form)
                except (DanglingTieError, OffGridError, VocabularyError) as exc:
                    manifest.skipped.append(
                        {"song": song, "index": sl.index, "reason": str(exc)}
                    )
                    continue
                inputs.append(input_seq)
                targets.append(target_seq)
                manifest.slices.append(
                    {
                        "song": song,
                        "index": sl.index,
                        "split": split,
                        "measures": [sl.start, sl.end],
                        "input_tokens": len(input_seq),
                        "target_tokens": len(target_seq),
                    }
                )
        _write_lines(split_dir / "input.tokens", inputs)
        _write_lines(split_dir / "target.tokens", targets)
    (outdir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def _write_lines(path: Path, seqs: List[TokenSeq]):
    with open(path, "w", encoding="utf-8") as fh:
        for seq in seqs:
            fh.write(seq.text())
            fh.write("\n")
