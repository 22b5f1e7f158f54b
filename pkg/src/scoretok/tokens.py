"""Notation-level token codec for piano scores.

A score serializes to one flat token sequence: the right staff (``R``), its
initial clef/key/time, then per measure any attribute changes, each voice
wrapped in ``<voice>``/``</voice>``, and a closing ``bar``; then the left
staff (``L``) likewise. Notes render as pitch token(s), duration, and the
optional stem/beam/tie attributes; rests as ``rest`` plus a duration.

Two forms exist: the regular form keeps duration/stem/beam as separate
tokens, the concatenated form merges them into a single ``attr_...`` token
(ties stay separate). The detokenizer accepts arbitrary token lists, repairs
what it can, and logs every repair in a ``FormatErrorReport``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

from .score import (
    BASS,
    BEAM_STATES,
    Clef,
    KeySignature,
    Measure,
    NoteEvent,
    Pitch,
    RestEvent,
    Score,
    StaffAttributes,
    STEMS,
    TIES,
    TimeSignature,
    TREBLE,
    VoiceSeg,
    measure_capacity,
    parse_duration,
    rest_fill,
)

REGULAR = "regular"
CONCATENATED = "concatenated"
FORMS = (REGULAR, CONCATENATED)

VOICE_OPEN = "<voice>"
VOICE_CLOSE = "</voice>"

# Closed duration vocabulary: every multiple of 1/24 quarter up to 4 quarters,
# i.e. exactly the values expressible on the 24-ticks-per-quarter grid.
DURATION_VALUES = tuple(Fraction(k, 24) for k in range(1, 97))
DURATION_SET = frozenset(DURATION_VALUES)

TIME_NUMERATORS = tuple(range(1, 13))
TIME_DENOMINATORS = (2, 4, 8, 16)
TIME_VALUES = tuple(
    TimeSignature(n, d) for d in TIME_DENOMINATORS for n in TIME_NUMERATORS
)
TIME_SET = frozenset(TIME_VALUES)

ERROR_KINDS = (
    "unbalanced-voice-tags",
    "orphan-attribute",
    "missing-duration",
    "measure-length-mismatch",
    "staff-length-disagreement",
    "unknown-token",
    "misordered-token",
)


class VocabularyError(ValueError):
    """A score carries a duration or signature the token vocabulary lacks."""


class FormError(ValueError):
    """A malformed concatenated attribute token."""


@dataclass
class TokenSeq:
    tokens: list
    level: str = "score"
    form: str = REGULAR

    def text(self) -> str:
        return " ".join(self.tokens)

    @classmethod
    def from_text(cls, line: str, level: str = "score", form: str = REGULAR) -> "TokenSeq":
        return cls(line.split(), level=level, form=form)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class FormatError:
    kind: str
    index: int
    detail: str = ""

    def render(self) -> str:
        return f"{self.kind}@{self.index} {self.detail}".rstrip()


@dataclass
class FormatErrorReport:
    entries: list = field(default_factory=list)

    def add(self, kind: str, index: int, detail: str = ""):
        assert kind in ERROR_KINDS
        self.entries.append(FormatError(kind, index, detail))

    @property
    def ok(self) -> bool:
        return not self.entries

    def render(self) -> str:
        return "\n".join(e.render() for e in self.entries)


# --- token rendering -------------------------------------------------------

def clef_token(c: Clef) -> str:
    return f"clef_{c.kind}"


def key_token(k: KeySignature) -> str:
    if k.kind == "natural":
        return "key_natural"
    return f"key_{k.kind}_{k.count}"


def time_token(t: TimeSignature) -> str:
    return f"time_{t.name}"


def pitch_token(p: Pitch) -> str:
    return f"note_{p.name}"


def len_token(d: Fraction) -> str:
    return f"len_{d}"


def beam_token(beams) -> str:
    return "beam_" + "_".join(beams)


def attr_token(d: Fraction, stem: Optional[str], beams) -> str:
    parts = [str(d)]
    if stem is not None:
        parts.append(stem)
    if beams:
        parts.extend(beams)
    return "attr_" + "_".join(parts)


def _check_duration(d: Fraction) -> Fraction:
    if d not in DURATION_SET:
        raise VocabularyError(f"duration {d} is not in the token vocabulary")
    return d


# --- tokenization ----------------------------------------------------------

def tokenize_score(score: Score, form: str = REGULAR) -> TokenSeq:
    """Serialize a valid score into one token sequence.

    Raises VocabularyError when the score uses a duration or time signature
    outside the closed vocabulary. Validity (voice sums, staff alignment) is
    the caller's responsibility; see ``validate_score``.
    """
    if form not in FORMS:
        raise ValueError(f"bad form {form!r}")
    out = []
    for staff_name, measures, attrs in score.staves():
        out.append(staff_name)
        if attrs.time not in TIME_SET:
            raise VocabularyError(f"time signature {attrs.time.name} is not in the token vocabulary")
        out.append(clef_token(attrs.clef))
        out.append(key_token(attrs.key))
        out.append(time_token(attrs.time))
        for m in measures:
            if m.clef_change is not None:
                out.append(clef_token(m.clef_change))
            if m.key_change is not None:
                out.append(key_token(m.key_change))
            if m.time_change is not None:
                if m.time_change not in TIME_SET:
                    raise VocabularyError(
                        f"time signature {m.time_change.name} is not in the token vocabulary"
                    )
                out.append(time_token(m.time_change))
            for voice in m.voices:
                out.append(VOICE_OPEN)
                for ev in voice.events:
                    _emit_event(out, ev, form)
                out.append(VOICE_CLOSE)
            out.append("bar")
    return TokenSeq(out, level="score", form=form)


def _emit_event(out: list, ev, form: str):
    if isinstance(ev, RestEvent):
        _check_duration(ev.duration)
        out.append("rest")
        if form == CONCATENATED:
            out.append(attr_token(ev.duration, None, None))
        else:
            out.append(len_token(ev.duration))
        return
    _check_duration(ev.duration)
    for p in ev.pitches:
        out.append(pitch_token(p))
    if form == CONCATENATED:
        out.append(attr_token(ev.duration, ev.stem, ev.beams))
    else:
        out.append(len_token(ev.duration))
        if ev.stem is not None:
            out.append(f"stem_{ev.stem}")
        if ev.beams is not None:
            out.append(beam_token(ev.beams))
    if ev.tie is not None:
        out.append(f"tie_{ev.tie}")


# --- token classification --------------------------------------------------

def _parse_pitch_name(text: str):
    try:
        return Pitch.from_name(text)
    except ValueError:
        return None


def _parse_vocab_duration(text: str):
    try:
        d = parse_duration(text)
    except ValueError:
        return None
    return d if d in DURATION_SET else None


def _parse_attr_fields(text: str):
    """Split attr payload into (duration, stem, beams); None when malformed."""
    fields = text.split("_")
    if not fields or not fields[0]:
        return None
    d = _parse_vocab_duration(fields[0])
    if d is None:
        return None
    rest = fields[1:]
    stem = None
    if rest and rest[0] in STEMS:
        stem = rest[0]
        rest = rest[1:]
    if rest:
        if len(rest) > 5 or any(s not in BEAM_STATES for s in rest):
            return None
        beams = tuple(rest)
    else:
        beams = None
    return d, stem, beams


def classify(token: str):
    """Map a token to (kind, payload); kind is None for non-vocabulary text.

    Classification is structural, so it covers the full closed vocabulary
    without materializing it.
    """
    if token in ("R", "L"):
        return "staff", token
    if token == "bar":
        return "bar", None
    if token == VOICE_OPEN:
        return "voice-open", None
    if token == VOICE_CLOSE:
        return "voice-close", None
    if token == "rest":
        return "rest", None
    if token == "key_natural":
        return "key", KeySignature("natural", 0)
    head, _, payload = token.partition("_")
    if head == "clef" and payload in ("treble", "bass"):
        return "clef", Clef(payload)
    if head == "key":
        kind, _, count = payload.partition("_")
        if kind in ("sharp", "flat") and count.isdigit() and 1 <= int(count) <= 6:
            return "key", KeySignature(kind, int(count))
        return None, None
    if head == "time":
        try:
            ts = TimeSignature.from_name(payload)
        except ValueError:
            return None, None
        return ("time", ts) if ts in TIME_SET else (None, None)
    if head == "note":
        p = _parse_pitch_name(payload)
        # Spellings the vocabulary admits but the pitch range rejects
        # (e.g. Cbb0) classify as notes with no payload.
        if p is None and _looks_like_pitch(payload):
            return "note", None
        return ("note", p) if p is not None else (None, None)
    if head == "len":
        d = _parse_vocab_duration(payload)
        return ("len", d) if d is not None else (None, None)
    if head == "stem" and payload in STEMS:
        return "stem", payload
    if head == "beam":
        states = tuple(payload.split("_"))
        if 1 <= len(states) <= 5 and all(s in BEAM_STATES for s in states):
            return "beam", states
        return None, None
    if head == "tie" and payload in TIES:
        return "tie", payload
    if head == "attr":
        parsed = _parse_attr_fields(payload)
        return ("attr", parsed) if parsed is not None else (None, None)
    return None, None


def _looks_like_pitch(payload: str) -> bool:
    if len(payload) < 2 or payload[0] not in "ABCDEFG" or not payload[-1].isdigit():
        return False
    return payload[1:-1] in ("", "#", "##", "b", "bb") and 0 <= int(payload[-1]) <= 8


# Token kinds specific to one form; seeing them in the other form means the
# token is not in that form's vocabulary.
_REGULAR_ONLY = ("len", "stem", "beam")
_CONCAT_ONLY = ("attr",)


# --- detokenization --------------------------------------------------------

class _PendingNote:
    __slots__ = ("pitches", "duration", "stem", "beams", "tie", "stage")

    def __init__(self):
        self.pitches = []
        self.duration = None
        self.stem = None
        self.beams = None
        self.tie = None
        self.stage = 0  # 0 collecting pitches, 1 len seen, 2 stem, 3 beam, 4 tie

    def freeze(self):
        return NoteEvent(
            tuple(self.pitches),
            self.duration,
            stem=self.stem,
            beams=self.beams,
            tie=self.tie,
        )


class _StaffBuilder:
    def __init__(self, name: str, start_index: int):
        self.name = name
        self.start_index = start_index
        self.initial_clef = None
        self.initial_key = None
        self.initial_time = None
        self.measures = []  # list of (Measure, bar_index)
        self.reset_measure()

    def reset_measure(self):
        self.changes = {"clef": None, "key": None, "time": None}
        self.voices = []
        self.measure_has_content = False

    def at_measure_start(self) -> bool:
        return not self.voices

    def apply_attribute(self, kind: str, value, first_measure: bool) -> bool:
        """Record an attribute token; returns False when it is a duplicate."""
        if first_measure:
            slot = {
                "clef": "initial_clef",
                "key": "initial_key",
                "time": "initial_time",
            }[kind]
            if getattr(self, slot) is None:
                setattr(self, slot, value)
                return True
        if self.changes[kind] is None:
            self.changes[kind] = value
            self.measure_has_content = True
            return True
        return False

    def finalize_measure(self, index: int):
        m = Measure(
            tuple(self.voices),
            clef_change=self.changes["clef"],
            key_change=self.changes["key"],
            time_change=self.changes["time"],
        )
        self.measures.append((m, index))
        self.reset_measure()


_DEFAULT_TIME = TimeSignature(4, 4)


class _Parser:
    """Shared engine behind ``detokenize`` and ``validate_tokens``."""

    def __init__(self, form: str):
        self.form = form
        self.report = FormatErrorReport()
        self.staffs = {}
        self.staff = None  # active _StaffBuilder
        self.voice = None  # open voice event list
        self.voice_implicit = False
        self.pending = None  # _PendingNote
        self.pending_rest = False
        self.pending_rest_index = 0
        self.open_note = None  # last completed note awaiting attributes
        self.open_note_stage = 1

    # -- reporting shorthands
    def err(self, kind, index, detail=""):
        self.report.add(kind, index, detail)

    # -- pending-note lifecycle
    def flush_pending(self, index):
        if self.pending is not None:
            self.err("missing-duration", index, "note dropped: no duration token")
            self.pending = None
        if self.pending_rest:
            self.err("missing-duration", index, "rest dropped: no duration token")
            self.pending_rest = False
        self.open_note = None

    def complete_note(self, duration, stem=None, beams=None):
        note = self.pending
        note.duration = duration
        note.stem = stem
        note.beams = beams
        self.pending = None
        self.voice.append(note)
        self.open_note = note
        self.open_note_stage = 3 if (stem or beams) else 1

    def close_voice(self, index, balanced: bool):
        # An implicitly opened voice was already reported once at creation.
        if not balanced and not self.voice_implicit:
            self.err("unbalanced-voice-tags", index, "voice auto-closed")
        events = []
        for item in self.voice:
            if isinstance(item, _PendingNote):
                events.append(item.freeze())
            else:
                events.append(item)
        self.staff.voices.append(VoiceSeg(tuple(events)))
        self.voice = None
        self.voice_implicit = False
        self.open_note = None

    def close_measure(self, index):
        self.flush_pending(index)
        if self.voice is not None:
            self.close_voice(index, balanced=False)
        self.staff.finalize_measure(index)

    def close_staff(self, index):
        if self.staff is None:
            return
        self.flush_pending(index)
        if self.voice is not None:
            self.close_voice(index, balanced=False)
        if self.staff.voices or any(v is not None for v in self.staff.changes.values()):
            self.err("misordered-token", index, f"staff {self.staff.name} ended without barline")
            self.staff.finalize_measure(index)
        if self.staff.measures and (
            self.staff.initial_clef is None
            or self.staff.initial_key is None
            or self.staff.initial_time is None
        ):
            missing = [
                n
                for n, v in (
                    ("clef", self.staff.initial_clef),
                    ("key", self.staff.initial_key),
                    ("time", self.staff.initial_time),
                )
                if v is None
            ]
            self.err(
                "misordered-token",
                self.staff.start_index,
                f"staff {self.staff.name} missing initial {'/'.join(missing)}",
            )
        self.staff = None

    # -- main loop
    def feed(self, tokens):
        if not tokens:
            self.err("misordered-token", 0, "empty sequence")
            return
        for i, token in enumerate(tokens):
            kind, payload = classify(token)
            if kind is None:
                self.err("unknown-token", i, token)
                continue
            if self.form == REGULAR and kind in _CONCAT_ONLY:
                self.err("unknown-token", i, f"{token} (concatenated-form token)")
                continue
            if self.form == CONCATENATED and kind in _REGULAR_ONLY:
                self.err("unknown-token", i, f"{token} (regular-form token)")
                continue
            getattr(self, "_on_" + kind.replace("-", "_"))(i, token, payload)
        self.close_staff(len(tokens))

    def _ensure_staff(self, index, token):
        if self.staff is None:
            self.err(
                "misordered-token", index, f"{token} before any staff token; right staff assumed"
            )
            self.staff = _StaffBuilder("R", index)
            self.staffs["R"] = self.staff

    def _ensure_voice(self, index, token):
        if self.voice is None:
            self.err("unbalanced-voice-tags", index, f"voice opened implicitly for {token}")
            self.voice = []
            self.voice_implicit = True

    def _on_staff(self, i, token, payload):
        if self.staff is None and not self.staffs and payload == "L":
            self.err("misordered-token", i, "left staff before right staff")
        self.close_staff(i)
        if payload in self.staffs:
            self.err("misordered-token", i, f"staff {payload} reopened")
            self.staff = self.staffs[payload]
        else:
            self.staff = _StaffBuilder(payload, i)
            self.staffs[payload] = self.staff

    def _on_bar(self, i, token, payload):
        self._ensure_staff(i, token)
        self.close_measure(i)

    def _on_voice_open(self, i, token, payload):
        self._ensure_staff(i, token)
        self.flush_pending(i)
        if self.voice is not None:
            self.close_voice(i, balanced=False)
        self.voice = []
        self.voice_implicit = False

    def _on_voice_close(self, i, token, payload):
        self._ensure_staff(i, token)
        self.flush_pending(i)
        if self.voice is None:
            self.err("unbalanced-voice-tags", i, "voice close without open")
            return
        self.close_voice(i, balanced=True)

    def _on_attribute(self, i, token, payload, kind):
        self._ensure_staff(i, token)
        self.flush_pending(i)
        if self.voice is not None or not self.staff.at_measure_start():
            self.err("misordered-token", i, f"{token} not at measure start")
            return
        first = not self.staff.measures
        if not self.staff.apply_attribute(kind, payload, first):
            self.err("misordered-token", i, f"duplicate {kind} token {token}")

    def _on_clef(self, i, token, payload):
        self._on_attribute(i, token, payload, "clef")

    def _on_key(self, i, token, payload):
        self._on_attribute(i, token, payload, "key")

    def _on_time(self, i, token, payload):
        self._on_attribute(i, token, payload, "time")

    def _on_rest(self, i, token, payload):
        self._ensure_staff(i, token)
        self._ensure_voice(i, token)
        self.flush_pending(i)
        self.pending_rest = True
        self.pending_rest_index = i

    def _on_note(self, i, token, payload):
        self._ensure_staff(i, token)
        self._ensure_voice(i, token)
        if payload is None:
            self.err("unknown-token", i, f"{token} (pitch outside the representable range)")
            return
        if self.pending_rest:
            self.flush_pending(i)
        self.open_note = None
        if self.pending is None:
            self.pending = _PendingNote()
        if payload in self.pending.pitches:
            self.err("misordered-token", i, f"duplicate chord pitch {token}")
            return
        self.pending.pitches.append(payload)

    def _on_len(self, i, token, payload):
        self._ensure_staff(i, token)
        if self.pending_rest:
            self.pending_rest = False
            self.voice.append(RestEvent(payload))
            self.open_note = None
            return
        if self.pending is not None:
            self.complete_note(payload)
            return
        self.err("orphan-attribute", i, f"{token} with no note or rest")

    def _on_attr(self, i, token, payload):
        self._ensure_staff(i, token)
        d, stem, beams = payload
        if self.pending_rest:
            self.pending_rest = False
            self.voice.append(RestEvent(d))
            self.open_note = None
            if stem is not None or beams is not None:
                self.err("orphan-attribute", i, f"stem/beam fields of {token} dropped on a rest")
            return
        if self.pending is not None:
            self.complete_note(d, stem=stem, beams=beams)
            return
        self.err("orphan-attribute", i, f"{token} with no note or rest")

    def _attach(self, i, token, slot, stage, value):
        if self.open_note is None:
            self.err("orphan-attribute", i, f"{token} with no note to attach to")
            return
        if getattr(self.open_note, slot) is not None:
            self.err("misordered-token", i, f"duplicate {token}")
            return
        if stage < self.open_note_stage:
            self.err("misordered-token", i, f"{token} out of canonical order")
        setattr(self.open_note, slot, value)
        self.open_note_stage = max(self.open_note_stage, stage)

    def _on_stem(self, i, token, payload):
        self._ensure_staff(i, token)
        self._attach(i, token, "stem", 2, payload)

    def _on_beam(self, i, token, payload):
        self._ensure_staff(i, token)
        self._attach(i, token, "beams", 3, payload)

    def _on_tie(self, i, token, payload):
        self._ensure_staff(i, token)
        self._attach(i, token, "tie", 4, payload)

    # -- assembly and semantic checks
    def _semantic_checks(self):
        for name in ("R", "L"):
            builder = self.staffs.get(name)
            if builder is None:
                continue
            time = builder.initial_time or _DEFAULT_TIME
            for mi, (measure, src_index) in enumerate(builder.measures):
                if measure.time_change is not None:
                    time = measure.time_change
                capacity = measure_capacity(time)
                if not measure.voices:
                    self.err(
                        "measure-length-mismatch",
                        src_index,
                        f"staff {name} measure {mi} has no voices",
                    )
                    continue
                for vi, voice in enumerate(measure.voices):
                    total = voice.total
                    if total != capacity:
                        self.err(
                            "measure-length-mismatch",
                            src_index,
                            f"staff {name} measure {mi} voice {vi} sums to {total} of {capacity}",
                        )

    def _staff_lengths(self, end_index):
        right = self.staffs.get("R")
        left = self.staffs.get("L")
        n_right = len(right.measures) if right else 0
        n_left = len(left.measures) if left else 0
        if n_right != n_left:
            self.err(
                "staff-length-disagreement",
                end_index,
                f"right staff {n_right} measures, left staff {n_left}",
            )
        return n_right, n_left

    def assemble(self, end_index) -> Score:
        self._semantic_checks()
        n_right, n_left = self._staff_lengths(end_index)
        target = max(n_right, n_left)
        staves = {}
        attrs = {}
        for name, default_clef in (("R", TREBLE), ("L", BASS)):
            builder = self.staffs.get(name)
            if builder is None:
                builder = _StaffBuilder(name, end_index)
            initial = StaffAttributes(
                builder.initial_clef or default_clef,
                builder.initial_key or KeySignature("natural", 0),
                builder.initial_time or _DEFAULT_TIME,
            )
            measures = [m for m, _ in builder.measures]
            # Pad the short staff with whole-rest measures.
            time = initial.time
            for m in measures:
                if m.time_change is not None:
                    time = m.time_change
            while len(measures) < target:
                measures.append(
                    Measure((VoiceSeg(rest_fill(measure_capacity(time))),))
                )
            staves[name] = tuple(measures)
            attrs[name] = initial
        return Score(staves["R"], staves["L"], attrs["R"], attrs["L"])

    def check_only(self, end_index):
        self._semantic_checks()
        self._staff_lengths(end_index)


def detokenize(seq: TokenSeq) -> tuple:
    """Rebuild a Score from tokens, logging every recovery.

    Well-formed tokenizer output round-trips exactly with an empty report.
    Arbitrary input (model output included) never raises: unknown tokens are
    skipped, unclosed voices close at the next bar, notes lacking a duration
    are dropped, and a short staff is padded with whole-rest measures.
    """
    parser = _Parser(seq.form)
    parser.feed(seq.tokens)
    score = parser.assemble(len(seq.tokens))
    return score, parser.report


def validate_tokens(seq: TokenSeq) -> FormatErrorReport:
    """Report every format error without assembling a Score.

    Shares the detokenizer's parse engine, so an empty report here is
    exactly equivalent to a recovery-free ``detokenize``.
    """
    parser = _Parser(seq.form)
    parser.feed(seq.tokens)
    parser.check_only(len(seq.tokens))
    return parser.report


# --- form conversion -------------------------------------------------------

def concat_form(seq: TokenSeq) -> TokenSeq:
    """Merge each len/stem/beam run into one attr token."""
    if seq.form != REGULAR:
        raise ValueError("concat_form expects a regular-form sequence")
    out = []
    tokens = seq.tokens
    i = 0
    while i < len(tokens):
        kind, payload = classify(tokens[i])
        if kind != "len":
            out.append(tokens[i])
            i += 1
            continue
        duration = payload
        stem = None
        beams = None
        if i + 1 < len(tokens):
            k2, p2 = classify(tokens[i + 1])
            if k2 == "stem":
                stem = p2
                i += 1
        if i + 1 < len(tokens):
            k3, p3 = classify(tokens[i + 1])
            if k3 == "beam":
                beams = p3
                i += 1
        out.append(attr_token(duration, stem, beams))
        i += 1
    return TokenSeq(out, level=seq.level, form=CONCATENATED)


def expand_form(seq: TokenSeq) -> TokenSeq:
    """Split each attr token back into len/stem/beam tokens."""
    if seq.form != CONCATENATED:
        raise ValueError("expand_form expects a concatenated-form sequence")
    out = []
    for token in seq.tokens:
        if not token.startswith("attr_"):
            out.append(token)
            continue
        parsed = _parse_attr_fields(token[len("attr_"):])
        if parsed is None:
            raise FormError(f"malformed attr token {token!r}")
        d, stem, beams = parsed
        out.append(len_token(d))
        if stem is not None:
            out.append(f"stem_{stem}")
        if beams is not None:
            out.append(beam_token(beams))
    return TokenSeq(out, level=seq.level, form=REGULAR)


# --- vocabulary ------------------------------------------------------------

def _render_pitch(step: str, alter: int, octave: int) -> str:
    alters = {-2: "bb", -1: "b", 0: "", 1: "#", 2: "##"}
    return f"note_{step}{alters[alter]}{octave}"


def _beam_variants():
    for n in range(1, 6):
        for combo in itertools.product(BEAM_STATES, repeat=n):
            yield combo


@lru_cache(maxsize=None)
def vocabulary(form: str = REGULAR) -> tuple:
    """The full ordered token vocabulary for one form."""
    if form not in FORMS:
        raise ValueError(f"bad form {form!r}")
    out = ["R", "L", "bar", "clef_treble", "clef_bass"]
    out.extend(f"key_sharp_{n}" for n in range(1, 7))
    out.extend(f"key_flat_{n}" for n in range(1, 7))
    out.append("key_natural")
    out.extend(time_token(t) for t in TIME_VALUES)
    out.extend([VOICE_OPEN, VOICE_CLOSE, "rest"])
    for step in "ABCDEFG":
        for alter in (-2, -1, 0, 1, 2):
            for octave in range(9):
                out.append(_render_pitch(step, alter, octave))
    if form == REGULAR:
        out.extend(len_token(d) for d in DURATION_VALUES)
        out.extend(f"stem_{s}" for s in STEMS)
        out.extend(beam_token(b) for b in _beam_variants())
    else:
        for d in DURATION_VALUES:
            for stem in (None, "up", "down"):
                out.append(attr_token(d, stem, None))
                for beams in _beam_variants():
                    out.append(attr_token(d, stem, beams))
    out.extend(f"tie_{t}" for t in TIES)
    return tuple(out)


# --- line-oriented text I/O ------------------------------------------------

def write_token_lines(path, seqs: Iterable[TokenSeq]):
    with open(path, "w", encoding="utf-8") as fh:
        for seq in seqs:
            fh.write(seq.text())
            fh.write("\n")


def read_token_lines(path, level: str = "score", form: str = REGULAR) -> list:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            out.append(TokenSeq.from_text(line.rstrip("\n"), level=level, form=form))
    return out
