from fractions import Fraction

import pytest

from scoretok.score import (
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
)

Q = Fraction  # shorthand for durations in quarters


def note(name, dur, stem=None, beams=None, tie=None):
    names = name.split("+") if isinstance(name, str) else name
    return NoteEvent(
        tuple(Pitch.from_name(n) for n in names), Q(dur), stem=stem, beams=beams, tie=tie
    )


def rest(dur):
    return RestEvent(Q(dur))


def measure(*voices, clef=None, key=None, time=None):
    return Measure(
        tuple(VoiceSeg(tuple(v)) for v in voices),
        clef_change=clef,
        key_change=key,
        time_change=time,
    )


def score(right, left, *, right_clef=TREBLE, left_clef=BASS,
          key=KeySignature("natural", 0), time=TimeSignature(4, 4)):
    return Score(
        tuple(right),
        tuple(left),
        StaffAttributes(right_clef, key, time),
        StaffAttributes(left_clef, key, time),
    )


@pytest.fixture
def simple_score():
    """Two 4/4 measures: chord, stems, a beamed 8th pair, and a tie over
    the barline in the left hand."""
    right = [
        measure([note("C4", 1), note("D4", 1), note("E4+G4", 2, stem="down")]),
        measure([
            note("F4", Q(1, 2), stem="up", beams=("start",)),
            note("G4", Q(1, 2), stem="up", beams=("stop",)),
            note("A4", 1),
            rest(2),
        ]),
    ]
    left = [
        measure([rest(2), note("C3", 2, tie="start")]),
        measure([note("C3", 1, tie="stop"), rest(1), rest(2)]),
    ]
    return score(right, left, key=KeySignature("sharp", 2))
