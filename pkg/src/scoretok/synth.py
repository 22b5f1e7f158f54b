"""Random valid-score synthesis for tests, benchmarks, and demo corpora.

The generator covers the whole token inventory: both clefs, every key kind
and count, several meters, chords, two-voice measures, multi-level beams,
and tie chains (including three-link chains that exercise tie_continue).
Everything it emits passes ``validate_score`` and uses only vocabulary
durations, so tokenization and down-conversion always succeed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from .score import (
    BASS,
    KeySignature,
    Measure,
    NoteEvent,
    Pitch,
    RestEvent,
    Score,
    StaffAttributes,
    TimeSignature,
    TREBLE,
    VoiceSeg,
    measure_capacity,
    rest_fill,
    validate_score,
)

# Denominators >= 4 keep every beat within 24 ticks, so pos offsets stay
# in 1..23; a denominator-2 meter would need wider offsets.
TIME_CHOICES = (
    TimeSignature(2, 4),
    TimeSignature(3, 4),
    TimeSignature(4, 4),
    TimeSignature(5, 4),
    TimeSignature(3, 8),
    TimeSignature(6, 8),
    TimeSignature(9, 8),
    TimeSignature(12, 8),
)

KEY_CHOICES = tuple(
    [KeySignature("natural", 0)]
    + [KeySignature(kind, n) for kind in ("sharp", "flat") for n in range(1, 7)]
)

# Rhythm pool in quarters; all on the 1/24 grid, binary and triplet values.
RHYTHM_POOL = (
    Fraction(4), Fraction(3), Fraction(2), Fraction(3, 2), Fraction(1),
    Fraction(3, 4), Fraction(2, 3), Fraction(1, 2), Fraction(1, 3),
    Fraction(1, 4), Fraction(1, 6), Fraction(1, 8), Fraction(1, 12),
)


@dataclass(frozen=True)
class SynthStyle:
    """Event-mix knobs; ``popular()`` skews to dense beamed 8th/16th notes."""

    rest_prob: float = 0.15
    chord_prob: float = 0.25
    stem_prob: float = 0.6
    beam_prob: float = 0.6
    tie_prob: float = 0.35
    chain_prob: float = 0.4  # extend a cross-measure tie into a 3-link chain
    two_voice_prob: float = 0.25
    change_prob: float = 0.25  # any attribute change at some later measure
    max_duration: Fraction = Fraction(4)
    short_bias: float = 0.0  # extra weight on sub-quarter durations
    # When set, stems/beams follow fixed engraving-style rules (stem by
    # pitch height, beam states by slot parity) instead of random draws.
    derived_attrs: bool = False
    accidental_weights: tuple = (1, 6, 20, 6, 1)  # bb, b, natural, #, ##
    # When set, clefs are the standard treble/bass pair and the key stays
    # natural (no clef/key changes); meters still vary.
    fixed_attrs: bool = False

    @classmethod
    def popular(cls) -> "SynthStyle":
        return cls(
            rest_prob=0.12,
            chord_prob=0.55,
            stem_prob=0.95,
            beam_prob=0.95,
            tie_prob=0.3,
            short_bias=0.8,
            max_duration=Fraction(1),
        )

    @classmethod
    def sparse(cls) -> "SynthStyle":
        """Lean scores (few, long notes; mostly one voice; rule-derived
        attributes) for small training-harness corpora."""
        return cls(
            rest_prob=0.2,
            chord_prob=0.1,
            stem_prob=0.5,
            beam_prob=0.3,
            tie_prob=0.15,
            chain_prob=0.2,
            two_voice_prob=0.1,
            change_prob=0.1,
            short_bias=-0.2,  # prefer longer values: fewer events per measure
            derived_attrs=True,
            accidental_weights=(1, 3, 40, 3, 1),
            fixed_attrs=True,
        )


_OCTAVES = {"R": (4, 5, 6), "L": (2, 3, 4)}


def _random_pitch(rng: random.Random, staff: str, style: SynthStyle) -> Pitch:
    while True:
        step = rng.choice("ABCDEFG")
        alter = rng.choices((-2, -1, 0, 1, 2), weights=style.accidental_weights)[0]
        octave = rng.choice(_OCTAVES[staff])
        try:
            return Pitch(step, alter, octave)
        except ValueError:
            continue


def _random_chord(rng: random.Random, staff: str, style: SynthStyle) -> tuple:
    n = 1
    if rng.random() < style.chord_prob:
        n = rng.choice((2, 2, 3))
    pitches = {}
    while len(pitches) < n:
        p = _random_pitch(rng, staff, style)
        pitches[(p.step, p.alter, p.octave)] = p
    return tuple(pitches.values())


def _ruled_stem(pitches) -> str:
    # engraving convention: stems point down from the middle line up
    return "up" if max(p.midi for p in pitches) < 71 else "down"


def _random_rhythm(rng: random.Random, capacity: Fraction, style: SynthStyle) -> List[Fraction]:
    out = []
    left = capacity
    while left > 0:
        options = [d for d in RHYTHM_POOL if d <= min(left, style.max_duration)]
        if not options:
            # remainder below the pool; it is on the grid by construction
            out.append(left)
            break
        weights = [
            (1.0 + style.short_bias * 3) if d < 1 else 1.0 for d in options
        ]
        d = rng.choices(options, weights=weights)[0]
        out.append(d)
        left -= d
    return out


def _beam_levels(duration: Fraction) -> int:
    if duration >= 1:
        return 0
    if duration >= Fraction(1, 2):
        return 1
    if duration >= Fraction(1, 4):
        return 2
    return 3


def _random_events(rng, staff, capacity, style) -> List:
    events = []
    for slot, d in enumerate(_random_rhythm(rng, capacity, style)):
        if rng.random() < style.rest_prob:
            events.append(RestEvent(d))
            continue
        pitches = _random_chord(rng, staff, style)
        stem = None
        if rng.random() < style.stem_prob:
            if style.derived_attrs:
                stem = _ruled_stem(pitches)
            else:
                stem = rng.choice(("up", "down"))
        beams = None
        levels = _beam_levels(d)
        if levels and rng.random() < style.beam_prob:
            if style.derived_attrs:
                beams = ("start" if slot % 2 == 0 else "stop",) * levels
            else:
                beams = tuple(
                    rng.choice(("start", "stop", "continue", "partial-left", "partial-right"))
                    for _ in range(rng.randint(1, levels))
                )
        events.append(NoteEvent(pitches, d, stem=stem, beams=beams))
    return events


def _tie_pass(rng, measures: List[List[List]], style: SynthStyle):
    """Link same-voice notes across measure boundaries into tie chains."""

    def retied(ev: NoteEvent, pitches, tie: str) -> NoteEvent:
        stem = ev.stem
        if stem is not None and style.derived_attrs:
            stem = _ruled_stem(pitches)  # keep the stem rule after repitching
        return NoteEvent(pitches, ev.duration, stem, ev.beams, tie)

    for mi in range(len(measures) - 1):
        cur, nxt = measures[mi], measures[mi + 1]
        for vi in range(min(len(cur), len(nxt))):
            if rng.random() >= style.tie_prob:
                continue
            a, b = cur[vi], nxt[vi]
            if not a or not b:
                continue
            if not isinstance(a[-1], NoteEvent) or not isinstance(b[0], NoteEvent):
                continue
            if a[-1].tie is not None or b[0].tie is not None:
                continue
            pitches = a[-1].pitches
            a[-1] = retied(a[-1], pitches, "start")
            # A middle link must span its whole measure, so chain only when
            # the next measure's voice is a single event.
            chained = (
                len(b) == 1
                and mi + 2 < len(measures)
                and vi < len(measures[mi + 2])
                and measures[mi + 2][vi]
                and isinstance(measures[mi + 2][vi][0], NoteEvent)
                and measures[mi + 2][vi][0].tie is None
                and rng.random() < style.chain_prob
            )
            if chained:
                b[0] = retied(b[0], pitches, "continue")
                c = measures[mi + 2][vi]
                c[0] = retied(c[0], pitches, "stop")
            else:
                b[0] = retied(b[0], pitches, "stop")


def random_score(
    seed: int,
    *,
    n_measures: Optional[int] = None,
    style: Optional[SynthStyle] = None,
    time: Optional[TimeSignature] = None,
    key: Optional[KeySignature] = None,
) -> Score:
    """One random valid score; the same seed reproduces it exactly."""
    rng = random.Random(seed)
    style = style or SynthStyle()
    n = n_measures or rng.randint(2, 6)
    time0 = time or rng.choice(TIME_CHOICES)
    if style.fixed_attrs:
        key0 = key or KeySignature("natural", 0)
        clefs = {"R": TREBLE, "L": BASS}
    else:
        key0 = key or rng.choice(KEY_CHOICES)
        clefs = {
            "R": rng.choice((TREBLE, TREBLE, TREBLE, BASS)),
            "L": rng.choice((BASS, BASS, BASS, TREBLE)),
        }

    time_changes = {}
    if n > 1 and rng.random() < style.change_prob:
        time_changes[rng.randrange(1, n)] = rng.choice(TIME_CHOICES)

    staves = {}
    attrs = {}
    for staff in ("R", "L"):
        clef_changes = {}
        key_changes = {}
        if not style.fixed_attrs:
            if n > 1 and rng.random() < style.change_prob:
                clef_changes[rng.randrange(1, n)] = rng.choice((TREBLE, BASS))
            if n > 1 and rng.random() < style.change_prob:
                key_changes[rng.randrange(1, n)] = rng.choice(KEY_CHOICES)

        time_now = time0
        raw: List[List[List]] = []
        for mi in range(n):
            if mi in time_changes:
                time_now = time_changes[mi]
            capacity = measure_capacity(time_now)
            n_voices = 2 if rng.random() < style.two_voice_prob else 1
            raw.append([_random_events(rng, staff, capacity, style) for _ in range(n_voices)])
        _tie_pass(rng, raw, style)
        measures = []
        for mi, voices in enumerate(raw):
            measures.append(
                Measure(
                    tuple(VoiceSeg(tuple(v)) for v in voices),
                    clef_change=clef_changes.get(mi),
                    key_change=key_changes.get(mi),
                    time_change=time_changes.get(mi),
                )
            )
        staves[staff] = tuple(measures)
        attrs[staff] = StaffAttributes(clefs[staff], key0, time0)

    score = Score(staves["R"], staves["L"], attrs["R"], attrs["L"])
    report = validate_score(score)
    assert report.ok, f"synth produced an invalid score: {report.render()}"
    return score


def random_song(seed: int, *, n_measures: int = 12, style: Optional[SynthStyle] = None) -> Score:
    """A longer score suitable for slicing exercises."""
    return random_score(seed, n_measures=n_measures, style=style)
