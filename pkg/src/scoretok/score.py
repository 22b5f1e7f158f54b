"""In-memory data model for two-staff piano scores.

Everything downstream (tokenizers, MusicXML I/O, down-conversion, the
evaluation metric) operates on these value objects. All types are immutable
after construction; local invariants are enforced by the constructors,
cross-object invariants (voice sums, staff alignment) by ``validate_score``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

STEPS = "ABCDEFG"
STEP_TO_SEMITONE = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
ALTER_TO_TEXT = {-2: "bb", -1: "b", 0: "", 1: "#", 2: "##"}
TEXT_TO_ALTER = {v: k for k, v in ALTER_TO_TEXT.items()}

CLEFS = ("treble", "bass")
KEY_KINDS = ("sharp", "flat", "natural")
STEMS = ("up", "down")
BEAM_STATES = ("start", "stop", "continue", "partial-left", "partial-right")
TIES = ("start", "continue", "stop")
MAX_BEAMS = 5

MIDI_MIN = 12
MIDI_MAX = 127

# Spelling tiebreak for chord ordering: octave, then letter from C, then alter.
_STEP_ORDER = {s: i for i, s in enumerate("CDEFGAB")}


@dataclass(frozen=True, order=False)
class Pitch:
    """A spelled pitch: letter step, accidental alter (-2..2), octave 0..8."""

    step: str
    alter: int = 0
    octave: int = 4

    def __post_init__(self):
        if self.step not in STEP_TO_SEMITONE:
            raise ValueError(f"bad pitch step {self.step!r}")
        if self.alter not in ALTER_TO_TEXT:
            raise ValueError(f"bad alter {self.alter!r}")
        if not 0 <= self.octave <= 8:
            raise ValueError(f"octave {self.octave} outside 0..8")
        m = self.midi
        if not MIDI_MIN <= m <= MIDI_MAX:
            raise ValueError(f"pitch {self.name} maps to MIDI {m}, outside {MIDI_MIN}..{MIDI_MAX}")

    @property
    def midi(self) -> int:
        """Chromatic MIDI number with C4 = 60."""
        return (self.octave + 1) * 12 + STEP_TO_SEMITONE[self.step] + self.alter

    @property
    def name(self) -> str:
        return f"{self.step}{ALTER_TO_TEXT[self.alter]}{self.octave}"

    @property
    def sort_key(self) -> tuple:
        return (self.midi, self.octave, _STEP_ORDER[self.step], self.alter)

    @classmethod
    def from_name(cls, name: str) -> "Pitch":
        """Parse e.g. 'C4', 'F#3', 'Abb5'."""
        if len(name) < 2 or name[0] not in STEP_TO_SEMITONE or not name[-1].isdigit():
            raise ValueError(f"bad pitch name {name!r}")
        alter_text = name[1:-1]
        if alter_text not in TEXT_TO_ALTER:
            raise ValueError(f"bad accidental in {name!r}")
        return cls(name[0], TEXT_TO_ALTER[alter_text], int(name[-1]))


def midi_number(p: Pitch) -> int:
    return p.midi


# Durations are plain Fractions measured in quarter notes, kept in lowest
# terms by the Fraction type itself.
Duration = Fraction


def duration(numerator: int, denominator: int = 1) -> Fraction:
    d = Fraction(numerator, denominator)
    if d < 0:
        raise ValueError("negative duration")
    return d


def parse_duration(text: str) -> Fraction:
    """Parse '1/2', '3/2', '4' into a quarter-note Fraction."""
    try:
        d = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad duration {text!r}") from exc
    if d < 0:
        raise ValueError(f"negative duration {text!r}")
    return d


@dataclass(frozen=True)
class KeySignature:
    """Sharp/flat count 1..6, or the natural (no accidentals) signature."""

    kind: str
    count: int = 0

    def __post_init__(self):
        if self.kind not in KEY_KINDS:
            raise ValueError(f"bad key kind {self.kind!r}")
        if self.kind == "natural":
            if self.count != 0:
                raise ValueError("natural key must have count 0")
        elif not 1 <= self.count <= 6:
            raise ValueError(f"key count {self.count} outside 1..6")

    @property
    def fifths(self) -> int:
        if self.kind == "sharp":
            return self.count
        if self.kind == "flat":
            return -self.count
        return 0

    @classmethod
    def from_fifths(cls, fifths: int) -> "KeySignature":
        if fifths > 0:
            return cls("sharp", fifths)
        if fifths < 0:
            return cls("flat", -fifths)
        return cls("natural", 0)


@dataclass(frozen=True)
class TimeSignature:
    beats: int
    beat_unit: int

    def __post_init__(self):
        if self.beats < 1:
            raise ValueError("beats per measure must be positive")
        if self.beat_unit < 1 or self.beat_unit & (self.beat_unit - 1):
            raise ValueError(f"beat unit {self.beat_unit} is not a power of two")

    @property
    def name(self) -> str:
        return f"{self.beats}/{self.beat_unit}"

    @classmethod
    def from_name(cls, name: str) -> "TimeSignature":
        num, _, den = name.partition("/")
        if not num.isdigit() or not den.isdigit():
            raise ValueError(f"bad time signature {name!r}")
        return cls(int(num), int(den))


def measure_capacity(ts: TimeSignature) -> Fraction:
    """Measure length in quarter notes: beats x (4 / beat unit)."""
    return Fraction(ts.beats * 4, ts.beat_unit)


def rest_fill(capacity: Fraction) -> tuple:
    """Rests covering a whole measure, chunked to the 4-quarter token cap."""
    out = []
    left = capacity
    while left > 4:
        out.append(RestEvent(Fraction(4)))
        left -= 4
    if left > 0:
        out.append(RestEvent(left))
    return tuple(out)


@dataclass(frozen=True)
class Clef:
    kind: str

    def __post_init__(self):
        if self.kind not in CLEFS:
            raise ValueError(f"bad clef {self.kind!r}")


TREBLE = Clef("treble")
BASS = Clef("bass")


@dataclass(frozen=True)
class NoteEvent:
    """A note or chord with its notation attributes.

    Chord pitches are canonicalized at construction: ascending MIDI number,
    spelling order breaking ties. Duplicate spellings are rejected.
    """

    pitches: tuple
    duration: Fraction
    stem: Optional[str] = None
    beams: Optional[tuple] = None
    tie: Optional[str] = None

    def __post_init__(self):
        if not self.pitches:
            raise ValueError("note needs at least one pitch")
        ordered = tuple(sorted(self.pitches, key=lambda p: p.sort_key))
        if len(set(ordered)) != len(ordered):
            raise ValueError("duplicate pitch in chord")
        object.__setattr__(self, "pitches", ordered)
        if not isinstance(self.duration, Fraction) or self.duration <= 0:
            raise ValueError(f"bad note duration {self.duration!r}")
        if self.stem is not None and self.stem not in STEMS:
            raise ValueError(f"bad stem {self.stem!r}")
        if self.beams is not None:
            beams = tuple(self.beams)
            if not beams or len(beams) > MAX_BEAMS:
                raise ValueError(f"beam list length must be 1..{MAX_BEAMS}")
            for state in beams:
                if state not in BEAM_STATES:
                    raise ValueError(f"bad beam state {state!r}")
            object.__setattr__(self, "beams", beams)
        if self.tie is not None and self.tie not in TIES:
            raise ValueError(f"bad tie {self.tie!r}")

    @property
    def is_chord(self) -> bool:
        return len(self.pitches) > 1


@dataclass(frozen=True)
class RestEvent:
    duration: Fraction

    def __post_init__(self):
        if not isinstance(self.duration, Fraction) or self.duration <= 0:
            raise ValueError(f"bad rest duration {self.duration!r}")


Event = Union[NoteEvent, RestEvent]


@dataclass(frozen=True)
class VoiceSeg:
    """One voice of one measure: an ordered run of notes and rests."""

    events: tuple

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        for ev in self.events:
            if not isinstance(ev, (NoteEvent, RestEvent)):
                raise ValueError(f"bad event {ev!r}")

    @property
    def total(self) -> Fraction:
        return sum((ev.duration for ev in self.events), Fraction(0))


@dataclass(frozen=True)
class Measure:
    """A measure of one staff; attribute changes bind to the measure start.

    ``voices`` may be empty only in recovery output from the detokenizer;
    ``validate_score`` reports such measures.
    """

    voices: tuple
    clef_change: Optional[Clef] = None
    key_change: Optional[KeySignature] = None
    time_change: Optional[TimeSignature] = None

    def __post_init__(self):
        object.__setattr__(self, "voices", tuple(self.voices))
        for v in self.voices:
            if not isinstance(v, VoiceSeg):
                raise ValueError(f"bad voice {v!r}")


@dataclass(frozen=True)
class StaffAttributes:
    clef: Clef
    key: KeySignature
    time: TimeSignature


@dataclass(frozen=True)
class Score:
    """Two staves of measures plus each staff's initial attributes."""

    right: tuple
    left: tuple
    right_attrs: StaffAttributes
    left_attrs: StaffAttributes

    def __post_init__(self):
        object.__setattr__(self, "right", tuple(self.right))
        object.__setattr__(self, "left", tuple(self.left))

    def staves(self) -> Iterator[tuple]:
        yield "R", self.right, self.right_attrs
        yield "L", self.left, self.left_attrs

    def staff(self, name: str) -> tuple:
        return self.right if name == "R" else self.left

    def attrs(self, name: str) -> StaffAttributes:
        return self.right_attrs if name == "R" else self.left_attrs


def staff_attribute_timeline(measures, initial: StaffAttributes):
    """Yield (measure_index, clef, key, time) in effect during each measure."""
    clef, key, time = initial.clef, initial.key, initial.time
    for i, m in enumerate(measures):
        if m.clef_change is not None:
            clef = m.clef_change
        if m.key_change is not None:
            key = m.key_change
        if m.time_change is not None:
            time = m.time_change
        yield i, clef, key, time


@dataclass(frozen=True)
class ValidationEntry:
    kind: str
    staff: Optional[str] = None
    measure: Optional[int] = None
    voice: Optional[int] = None
    detail: str = ""

    def render(self) -> str:
        where = "/".join(
            str(x) for x in (self.staff, self.measure, self.voice) if x is not None
        )
        return f"{self.kind}[{where}] {self.detail}".rstrip()


@dataclass
class ValidationReport:
    entries: list = field(default_factory=list)

    def add(self, kind: str, staff=None, measure=None, voice=None, detail=""):
        self.entries.append(ValidationEntry(kind, staff, measure, voice, detail))

    @property
    def ok(self) -> bool:
        return not self.entries

    def render(self) -> str:
        return "\n".join(e.render() for e in self.entries)


def validate_score(score: Score) -> ValidationReport:
    """Check cross-object invariants; every violation becomes a report entry.

    Nothing is repaired. The walk order is fixed (right staff then left,
    measures in order, voices in order) so the report is byte-stable.
    """
    report = ValidationReport()
    if len(score.right) != len(score.left):
        report.add(
            "measure-count-mismatch",
            detail=f"right staff has {len(score.right)} measures, left has {len(score.left)}",
        )
    if score.right_attrs.time != score.left_attrs.time:
        report.add(
            "time-signature-desync",
            measure=0,
            detail=f"initial time {score.right_attrs.time.name} vs {score.left_attrs.time.name}",
        )
    right_times = {i: t for i, _, _, t in staff_attribute_timeline(score.right, score.right_attrs)}
    left_times = {i: t for i, _, _, t in staff_attribute_timeline(score.left, score.left_attrs)}
    for i in range(min(len(score.right), len(score.left))):
        if right_times[i] != left_times[i]:
            report.add(
                "time-signature-desync",
                measure=i,
                detail=f"right {right_times[i].name} vs left {left_times[i].name}",
            )
        rc = score.right[i].time_change
        lc = score.left[i].time_change
        if (rc is None) != (lc is None):
            report.add(
                "time-signature-desync",
                measure=i,
                detail="time change present on one staff only",
            )
    for staff_name, measures, attrs in score.staves():
        times = dict(
            (i, t) for i, _, _, t in staff_attribute_timeline(measures, attrs)
        )
        for i, m in enumerate(measures):
            capacity = measure_capacity(times[i])
            if not m.voices:
                report.add("empty-measure", staff=staff_name, measure=i)
                continue
            for vi, voice in enumerate(m.voices):
                total = voice.total
                if total < capacity:
                    report.add(
                        "underfull-voice",
                        staff=staff_name,
                        measure=i,
                        voice=vi,
                        detail=f"events sum to {total} of {capacity} quarters",
                    )
                elif total > capacity:
                    report.add(
                        "overfull-voice",
                        staff=staff_name,
                        measure=i,
                        voice=vi,
                        detail=f"events sum to {total} of {capacity} quarters",
                    )
    return report
