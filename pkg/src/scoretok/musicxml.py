"""MusicXML subset reader and writer.

Covers part-wise documents holding one piano part with two staves: notes,
rests, chords, voices, ties, stems, beams, and clef/key/time attributes.
Anything outside the subset is skipped with a warning (or fails, per
profile); anything the model cannot represent at all (a third staff, a
7-sharp key) is a hard error. Parsed scores are always validated before
they are returned.
"""

from __future__ import annotations

import io
import zipfile
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple
from xml.etree import ElementTree as ET

from .score import (
    BASS,
    Clef,
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
    validate_score,
)

DIVISIONS = 24  # per quarter on emit; covers 32nd notes and triplets exactly

_BEAM_FROM_XML = {
    "begin": "start",
    "end": "stop",
    "continue": "continue",
    "forward hook": "partial-right",
    "backward hook": "partial-left",
}
_BEAM_TO_XML = {v: k for k, v in _BEAM_FROM_XML.items()}

_CLEF_FROM_XML = {("G", 2): TREBLE, ("F", 4): BASS}
_CLEF_TO_XML = {"treble": ("G", 2), "bass": ("F", 4)}

_TYPE_BY_QUARTERS = {
    Fraction(4): "whole",
    Fraction(2): "half",
    Fraction(1): "quarter",
    Fraction(1, 2): "eighth",
    Fraction(1, 4): "16th",
    Fraction(1, 8): "32nd",
    Fraction(1, 16): "64th",
}

# Note children silently absorbed: they carry nothing the model keeps beyond
# what pitch/duration already encode.
_IGNORED_NOTE_CHILDREN = {
    "type", "dot", "accidental", "time-modification", "notehead",
    "instrument", "notations",
}
_IGNORED_MEASURE_CHILDREN = {"backup", "barline", "print", "sound"}
_IGNORED_ATTR_CHILDREN = {"divisions", "staves", "measure-style"}


class MusicXmlError(ValueError):
    """Document cannot be represented in the model."""


@dataclass(frozen=True)
class MusicXmlProfile:
    """Parse profile; ``unknown_policy`` is 'skip' (warn) or 'fail'."""

    unknown_policy: str = "skip"

    def __post_init__(self):
        if self.unknown_policy not in ("skip", "fail"):
            raise ValueError(f"bad unknown-element policy {self.unknown_policy!r}")


DEFAULT_PROFILE = MusicXmlProfile()


def _load_root(source) -> ET.Element:
    data = _as_bytes(source)
    if data[:4] == b"PK\x03\x04":
        data = _extract_mxl(data)
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise MusicXmlError(f"malformed XML: {exc}") from exc


def _as_bytes(source) -> bytes:
    if isinstance(source, bytes):
        return source
    if hasattr(source, "read"):
        data = source.read()
        return data if isinstance(data, bytes) else data.encode("utf-8")
    with open(source, "rb") as fh:
        return fh.read()


def _extract_mxl(data: bytes) -> bytes:
    with zipfile.ZipFile(io.BytesIO(data)) as zf:
        try:
            container = ET.fromstring(zf.read("META-INF/container.xml"))
            rootfile = container.find(".//rootfile").get("full-path")
        except (KeyError, AttributeError) as exc:
            raise MusicXmlError("mxl container without a rootfile entry") from exc
        return zf.read(rootfile)


def collect_system_breaks(source) -> List[int]:
    """Indices of measures starting a new system (print new-system='yes')."""
    root = _load_root(source)
    part = root.find("part")
    breaks = []
    if part is None:
        return breaks
    for i, measure in enumerate(part.findall("measure")):
        for pr in measure.findall("print"):
            if pr.get("new-system") == "yes" and i > 0:
                breaks.append(i)
    return breaks


class _Warnings:
    def __init__(self, policy: str):
        self.policy = policy
        self.entries: List[str] = []

    def skip(self, measure: int, what: str):
        message = f"measure {measure}: skipped <{what}>"
        if self.policy == "fail":
            raise MusicXmlError(message)
        self.entries.append(message)


def _int_text(el, name: str, measure: int) -> int:
    node = el.find(name)
    if node is None or node.text is None:
        raise MusicXmlError(f"measure {measure}: <{el.tag}> missing <{name}>")
    try:
        return int(node.text.strip())
    except ValueError as exc:
        raise MusicXmlError(f"measure {measure}: bad <{name}> value {node.text!r}") from exc


def _parse_pitch(el, measure: int) -> Pitch:
    step = el.findtext("step", "").strip()
    octave_text = el.findtext("octave", "").strip()
    alter_text = el.findtext("alter", "0").strip()
    try:
        alter = int(alter_text)
    except ValueError as exc:
        raise MusicXmlError(f"measure {measure}: microtonal alter {alter_text!r}") from exc
    try:
        return Pitch(step, alter, int(octave_text))
    except ValueError as exc:
        raise MusicXmlError(f"measure {measure}: {exc}") from exc


def _parse_key(el, measure: int) -> KeySignature:
    fifths = _int_text(el, "fifths", measure)
    if not -6 <= fifths <= 6:
        raise MusicXmlError(f"measure {measure}: key with {fifths} fifths is outside the vocabulary")
    return KeySignature.from_fifths(fifths)


def _parse_time(el, measure: int) -> TimeSignature:
    beats = _int_text(el, "beats", measure)
    beat_type = _int_text(el, "beat-type", measure)
    try:
        return TimeSignature(beats, beat_type)
    except ValueError as exc:
        raise MusicXmlError(f"measure {measure}: {exc}") from exc


def _parse_clef(el, measure: int) -> Clef:
    sign = el.findtext("sign", "").strip()
    line_text = el.findtext("line", "").strip()
    line = int(line_text) if line_text else {"G": 2, "F": 4}.get(sign, 0)
    clef = _CLEF_FROM_XML.get((sign, line))
    if clef is None:
        raise MusicXmlError(f"measure {measure}: unsupported clef {sign}/{line}")
    return clef


def _tie_from_elements(elements) -> Optional[str]:
    kinds = {el.get("type") for el in elements}
    if "start" in kinds and "stop" in kinds:
        return "continue"
    if "start" in kinds:
        return "start"
    if "stop" in kinds:
        return "stop"
    return None


class _RawNote:
    __slots__ = ("pitches", "duration", "stem", "beams", "tie", "is_rest")

    def __init__(self, duration, is_rest, pitch=None, stem=None, beams=None, tie=None):
        self.duration = duration
        self.is_rest = is_rest
        self.pitches = [pitch] if pitch else []
        self.stem = stem
        self.beams = beams
        self.tie = tie

    def freeze(self):
        if self.is_rest:
            return RestEvent(self.duration)
        return NoteEvent(
            tuple(self.pitches),
            self.duration,
            stem=self.stem,
            beams=self.beams,
            tie=self.tie,
        )


def parse_musicxml(source, profile: MusicXmlProfile = DEFAULT_PROFILE) -> Tuple[Score, List[str]]:
    """Parse a part-wise document into a validated Score.

    Returns (score, warnings). Raises MusicXmlError for anything that cannot
    be represented: malformed XML, a part count other than one, staff counts
    other than two, out-of-vocabulary keys/times, or a score that fails
    validation after assembly.
    """
    root = _load_root(source)
    if root.tag != "score-partwise":
        raise MusicXmlError(f"unsupported document type <{root.tag}>")
    parts = root.findall("part")
    if len(parts) != 1:
        raise MusicXmlError(f"expected exactly one part, found {len(parts)}")
    warnings = _Warnings(profile.unknown_policy)

    divisions = None
    declared_staves = None
    time: Optional[TimeSignature] = None
    initials = {1: {}, 2: {}}
    right_measures: List[Measure] = []
    left_measures: List[Measure] = []

    for mi, measure_el in enumerate(parts[0].findall("measure")):
        changes = {1: {}, 2: {}}
        voices = {1: {}, 2: {}}  # staff -> voice name -> [_RawNote]
        last_note = {}  # (staff, voice) -> _RawNote, for <chord/>
        for el in measure_el:
            if el.tag == "attributes":
                for attr in el:
                    if attr.tag == "divisions":
                        divisions = int(attr.text.strip())
                    elif attr.tag == "staves":
                        declared_staves = int(attr.text.strip())
                    elif attr.tag == "key":
                        key = _parse_key(attr, mi)
                        for staff in _attr_staves(attr):
                            _record_attr(initials, changes, mi, staff, "key", key)
                    elif attr.tag == "time":
                        time = _parse_time(attr, mi)
                        for staff in (1, 2):
                            _record_attr(initials, changes, mi, staff, "time", time)
                    elif attr.tag == "clef":
                        clef = _parse_clef(attr, mi)
                        staff = int(attr.get("number", "1"))
                        _record_attr(initials, changes, mi, staff, "clef", clef)
                    elif attr.tag not in _IGNORED_ATTR_CHILDREN:
                        warnings.skip(mi, f"attributes/{attr.tag}")
            elif el.tag == "note":
                _parse_note(el, mi, divisions, time, voices, last_note, warnings)
            elif el.tag == "forward":
                warnings.skip(mi, "forward")
            elif el.tag not in _IGNORED_MEASURE_CHILDREN:
                warnings.skip(mi, el.tag)

        observed = {s for s in (1, 2) if voices[s]}
        if any(s not in (1, 2) for s in observed):
            raise MusicXmlError(f"measure {mi}: staff outside 1..2")
        for staff, bucket in ((1, right_measures), (2, left_measures)):
            voice_segs = tuple(
                VoiceSeg(tuple(raw.freeze() for raw in voices[staff][name]))
                for name in sorted(voices[staff], key=_voice_sort_key)
            )
            bucket.append(
                Measure(
                    voice_segs,
                    clef_change=changes[staff].get("clef"),
                    key_change=changes[staff].get("key"),
                    time_change=changes[staff].get("time"),
                )
            )

    n_staves = declared_staves
    if n_staves is None:
        n_staves = 2 if any(m.voices for m in left_measures) else 1
    if n_staves != 2:
        raise MusicXmlError(f"expected 2 staves, found {n_staves}")

    score = Score(
        tuple(right_measures),
        tuple(left_measures),
        StaffAttributes(
            initials[1].get("clef", TREBLE),
            initials[1].get("key", KeySignature("natural", 0)),
            initials[1].get("time", TimeSignature(4, 4)),
        ),
        StaffAttributes(
            initials[2].get("clef", BASS),
            initials[2].get("key", KeySignature("natural", 0)),
            initials[2].get("time", TimeSignature(4, 4)),
        ),
    )
    report = validate_score(score)
    if not report.ok:
        raise MusicXmlError(f"document parses but violates the model:\n{report.render()}")
    return score, warnings.entries


def _attr_staves(attr_el) -> tuple:
    number = attr_el.get("number")
    return (int(number),) if number else (1, 2)


def _record_attr(initials, changes, measure: int, staff: int, kind: str, value):
    if staff not in (1, 2):
        raise MusicXmlError(f"measure {measure}: attribute for staff {staff}")
    if measure == 0 and kind not in initials[staff]:
        initials[staff][kind] = value
    else:
        changes[staff][kind] = value


def _voice_sort_key(name: str):
    return (0, int(name)) if name.isdigit() else (1, name)


def _parse_note(el, mi, divisions, time, voices, last_note, warnings):
    if el.find("grace") is not None or el.find("cue") is not None:
        warnings.skip(mi, "note with grace/cue")
        return
    for child in el:
        if child.tag not in (
            "chord", "pitch", "rest", "duration", "tie", "voice", "staff", "stem", "beam",
        ) and child.tag not in _IGNORED_NOTE_CHILDREN:
            warnings.skip(mi, f"note/{child.tag}")

    staff = int(el.findtext("staff", "1").strip())
    if staff not in (1, 2):
        raise MusicXmlError(f"measure {mi}: note on staff {staff}")
    voice = el.findtext("voice", "1").strip()
    rest_el = el.find("rest")

    duration_text = el.findtext("duration")
    if duration_text is None:
        if rest_el is not None and rest_el.get("measure") == "yes" and time is not None:
            dur = measure_capacity(time)
        else:
            raise MusicXmlError(f"measure {mi}: note without <duration>")
    else:
        if divisions is None:
            raise MusicXmlError(f"measure {mi}: <duration> before <divisions>")
        dur = Fraction(int(duration_text.strip()), divisions)

    if el.find("chord") is not None:
        base = last_note.get((staff, voice))
        if base is None or base.is_rest:
            raise MusicXmlError(f"measure {mi}: <chord/> with no preceding note")
        pitch_el = el.find("pitch")
        if pitch_el is None:
            raise MusicXmlError(f"measure {mi}: chord note without <pitch>")
        base.pitches.append(_parse_pitch(pitch_el, mi))
        return

    if rest_el is not None:
        raw = _RawNote(dur, is_rest=True)
    else:
        pitch_el = el.find("pitch")
        if pitch_el is None:
            raise MusicXmlError(f"measure {mi}: note without <pitch> or <rest>")
        stem = el.findtext("stem", "").strip() or None
        if stem is not None and stem not in ("up", "down"):
            warnings.skip(mi, f"stem value {stem}")
            stem = None
        beams = _parse_beams(el)
        tie = _tie_from_elements(el.findall("tie"))
        if tie is None:
            notations = el.find("notations")
            if notations is not None:
                tie = _tie_from_elements(notations.findall("tied"))
        raw = _RawNote(dur, is_rest=False, pitch=_parse_pitch(pitch_el, mi),
                       stem=stem, beams=beams, tie=tie)
    voices[staff].setdefault(voice, []).append(raw)
    last_note[(staff, voice)] = raw


def _parse_beams(el) -> Optional[tuple]:
    found = {}
    for beam_el in el.findall("beam"):
        state = _BEAM_FROM_XML.get((beam_el.text or "").strip())
        if state is not None:
            found[int(beam_el.get("number", "1"))] = state
    if not found:
        return None
    return tuple(found[n] for n in sorted(found))


# --- emission ---------------------------------------------------------------

def emit_musicxml(score: Score, strict: bool = True) -> bytes:
    """Serialize a valid score as part-wise MusicXML (one part, two staves,
    24 divisions per quarter). Round-trips through ``parse_musicxml``.

    ``strict=False`` skips the validity gate so recovered (possibly
    underfull) detokenizer output can still be written out.
    """
    if strict:
        report = validate_score(score)
        if not report.ok:
            raise MusicXmlError(f"cannot emit invalid score:\n{report.render()}")

    root = ET.Element("score-partwise", version="3.1")
    part_list = ET.SubElement(root, "part-list")
    score_part = ET.SubElement(part_list, "score-part", id="P1")
    ET.SubElement(score_part, "part-name").text = "Piano"
    part = ET.SubElement(root, "part", id="P1")

    time = score.right_attrs.time
    for mi in range(len(score.right)):
        measure_el = ET.SubElement(part, "measure", number=str(mi + 1))
        right, left = score.right[mi], score.left[mi]
        if right.time_change is not None:
            time = right.time_change
        _emit_attributes(measure_el, score, mi, right, left)
        capacity = measure_capacity(time)
        staff_voices = [(1, right.voices), (2, left.voices)]
        emitted = 0
        total_voices = sum(len(v) for _, v in staff_voices)
        for staff, voice_list in staff_voices:
            for vi, voice in enumerate(voice_list):
                number = vi + 1 if staff == 1 else vi + 5
                for ev in voice.events:
                    _emit_event(measure_el, ev, staff, number)
                emitted += 1
                if emitted < total_voices:
                    backup = ET.SubElement(measure_el, "backup")
                    ET.SubElement(backup, "duration").text = str(
                        _divisions_int(capacity)
                    )
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    body = ET.tostring(root, encoding="unicode")
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<!DOCTYPE score-partwise PUBLIC "-//Recordare//DTD MusicXML 3.1 '
        'Partwise//EN" "http://www.musicxml.org/dtds/partwise.dtd">\n'
        + body
        + "\n"
    ).encode("utf-8")


def _divisions_int(q: Fraction) -> int:
    t = q * DIVISIONS
    if t.denominator != 1:
        raise MusicXmlError(f"duration {q} not expressible at {DIVISIONS} divisions")
    return int(t)


def _emit_attributes(measure_el, score: Score, mi: int, right: Measure, left: Measure):
    first = mi == 0
    attrs = ET.Element("attributes")
    if first:
        ET.SubElement(attrs, "divisions").text = str(DIVISIONS)

    right_key = score.right_attrs.key if first else right.key_change
    left_key = score.left_attrs.key if first else left.key_change
    if right_key is not None and right_key == left_key:
        ET.SubElement(ET.SubElement(attrs, "key"), "fifths").text = str(right_key.fifths)
    else:
        for number, key in (("1", right_key), ("2", left_key)):
            if key is not None:
                el = ET.SubElement(attrs, "key", number=number)
                ET.SubElement(el, "fifths").text = str(key.fifths)

    time = score.right_attrs.time if first else right.time_change
    if time is not None:
        el = ET.SubElement(attrs, "time")
        ET.SubElement(el, "beats").text = str(time.beats)
        ET.SubElement(el, "beat-type").text = str(time.beat_unit)

    if first:
        ET.SubElement(attrs, "staves").text = "2"

    right_clef = score.right_attrs.clef if first else right.clef_change
    left_clef = score.left_attrs.clef if first else left.clef_change
    for number, clef in (("1", right_clef), ("2", left_clef)):
        if clef is not None:
            sign, line = _CLEF_TO_XML[clef.kind]
            el = ET.SubElement(attrs, "clef", number=number)
            ET.SubElement(el, "sign").text = sign
            ET.SubElement(el, "line").text = str(line)

    if len(attrs):
        measure_el.append(attrs)


def _emit_event(measure_el, ev, staff: int, voice_number: int):
    if isinstance(ev, RestEvent):
        note_el = ET.SubElement(measure_el, "note")
        ET.SubElement(note_el, "rest")
        ET.SubElement(note_el, "duration").text = str(_divisions_int(ev.duration))
        ET.SubElement(note_el, "voice").text = str(voice_number)
        _emit_type(note_el, ev.duration)
        ET.SubElement(note_el, "staff").text = str(staff)
        return
    for i, pitch in enumerate(ev.pitches):
        note_el = ET.SubElement(measure_el, "note")
        if i > 0:
            ET.SubElement(note_el, "chord")
        pitch_el = ET.SubElement(note_el, "pitch")
        ET.SubElement(pitch_el, "step").text = pitch.step
        if pitch.alter:
            ET.SubElement(pitch_el, "alter").text = str(pitch.alter)
        ET.SubElement(pitch_el, "octave").text = str(pitch.octave)
        ET.SubElement(note_el, "duration").text = str(_divisions_int(ev.duration))
        if ev.tie in ("stop", "continue"):
            ET.SubElement(note_el, "tie", type="stop")
        if ev.tie in ("start", "continue"):
            ET.SubElement(note_el, "tie", type="start")
        ET.SubElement(note_el, "voice").text = str(voice_number)
        _emit_type(note_el, ev.duration)
        if ev.stem is not None:
            ET.SubElement(note_el, "stem").text = ev.stem
        ET.SubElement(note_el, "staff").text = str(staff)
        if i == 0 and ev.beams is not None:
            for level, state in enumerate(ev.beams, start=1):
                beam_el = ET.SubElement(note_el, "beam", number=str(level))
                beam_el.text = _BEAM_TO_XML[state]
        if ev.tie is not None:
            notations = ET.SubElement(note_el, "notations")
            if ev.tie in ("stop", "continue"):
                ET.SubElement(notations, "tied", type="stop")
            if ev.tie in ("start", "continue"):
                ET.SubElement(notations, "tied", type="start")


def _emit_type(note_el, dur: Fraction):
    if dur in _TYPE_BY_QUARTERS:
        ET.SubElement(note_el, "type").text = _TYPE_BY_QUARTERS[dur]
        return
    base = dur * Fraction(2, 3)
    if base in _TYPE_BY_QUARTERS:
        ET.SubElement(note_el, "type").text = _TYPE_BY_QUARTERS[base]
        ET.SubElement(note_el, "dot")
