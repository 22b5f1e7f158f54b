"""Note-level (MIDI-equivalent) view of a score.

Scores down-convert to sounding-note events on a 24-ticks-per-quarter grid:
tie chains merge, voices and staves collapse into one stream, rests and all
notation attributes vanish. The event stream tokenizes in a REMI-style
grammar extended with ``beat`` tokens (one per time-signature beat after the
first of each measure), and can be perturbed with duration-proportional
normal noise to simulate unquantized input.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional, Tuple

from .score import NoteEvent, Score, TimeSignature, measure_capacity, staff_attribute_timeline
from .tokens import TokenSeq

TICKS_PER_QUARTER = 24


class OffGridError(ValueError):
    """A duration or onset that does not land on the 24-tick grid."""


class DanglingTieError(ValueError):
    def __init__(self, staff: str, measure: int, detail: str):
        super().__init__(f"dangling tie on staff {staff}, measure {measure}: {detail}")
        self.staff = staff
        self.measure = measure


@dataclass(frozen=True)
class NoteLevelEvent:
    """One sounding note. Ticks are ints on the grid; perturbation may leave
    them off-grid floats until ``snap_to_grid`` runs."""

    onset: float
    pitch: int
    duration: float

    @property
    def sort_key(self):
        return (self.onset, self.pitch, self.duration)


@dataclass
class NoteLevelSeq:
    events: List[NoteLevelEvent]
    meter_map: List[Tuple[int, TimeSignature]]

    def __post_init__(self):
        if not self.meter_map or self.meter_map[0][0] != 0:
            raise ValueError("meter map must begin at measure 0")


def _ticks(q: Fraction, where: str) -> int:
    t = q * TICKS_PER_QUARTER
    if t.denominator != 1:
        raise OffGridError(f"{where}: {q} quarters is off the {TICKS_PER_QUARTER}-tick grid")
    return int(t)


def _meter_map(score: Score) -> List[Tuple[int, TimeSignature]]:
    entries = []
    last = None
    for i, _, _, time in staff_attribute_timeline(score.right, score.right_attrs):
        if time != last:
            entries.append((i, time))
            last = time
    if not entries:
        entries.append((0, score.right_attrs.time))
    return entries


class _TieChains:
    """Open tie chains of one staff, keyed by MIDI pitch."""

    def __init__(self, staff: str):
        self.staff = staff
        self.open = {}  # midi -> list of [start_tick, end_tick, measure]

    def start(self, midi, onset, end, measure):
        self.open.setdefault(midi, []).append([onset, end, measure])

    def _take(self, midi, onset, measure, token):
        chains = self.open.get(midi, [])
        for i, chain in enumerate(chains):
            if chain[1] == onset:
                return chains.pop(i)
        raise DanglingTieError(self.staff, measure, f"tie_{token} at MIDI {midi} continues nothing")

    def extend(self, midi, onset, end, measure):
        chain = self._take(midi, onset, measure, "continue")
        chain[1] = end
        self.open.setdefault(midi, []).append(chain)

    def stop(self, midi, onset, end, measure):
        chain = self._take(midi, onset, measure, "stop")
        return chain[0], end

    def finish(self):
        for midi, chains in self.open.items():
            if chains:
                raise DanglingTieError(
                    self.staff, chains[0][2], f"tie at MIDI {midi} never stopped"
                )


def downconvert(score: Score) -> NoteLevelSeq:
    """Collapse a score into time-ordered sounding notes.

    Tie chains become single events spanning the whole chain; a chain that
    does not resolve raises DanglingTieError naming its measure.
    """
    events = []
    for staff_name, measures, attrs in score.staves():
        raw = []  # (onset, dur, midi, tie, measure)
        measure_start = Fraction(0)
        time = attrs.time
        for mi, m in enumerate(measures):
            if m.time_change is not None:
                time = m.time_change
            for voice in m.voices:
                pos = measure_start
                for ev in voice.events:
                    if isinstance(ev, NoteEvent):
                        onset = _ticks(pos, f"staff {staff_name} measure {mi}")
                        dur = _ticks(ev.duration, f"staff {staff_name} measure {mi}")
                        for p in ev.pitches:
                            raw.append((onset, dur, p.midi, ev.tie, mi))
                    pos += ev.duration
            measure_start += measure_capacity(time)
        chains = _TieChains(staff_name)
        for onset, dur, midi, tie, mi in sorted(raw, key=lambda r: (r[0], r[2])):
            if tie is None:
                events.append(NoteLevelEvent(onset, midi, dur))
            elif tie == "start":
                chains.start(midi, onset, onset + dur, mi)
            elif tie == "continue":
                chains.extend(midi, onset, onset + dur, mi)
            else:
                start, end = chains.stop(midi, onset, onset + dur, mi)
                events.append(NoteLevelEvent(start, midi, end - start))
        chains.finish()
    events.sort(key=lambda e: e.sort_key)
    return NoteLevelSeq(events, _meter_map(score))


# --- measure geometry ------------------------------------------------------

def _measure_times(meter_map, n_measures):
    """(start_tick, ts) for measures 0..n_measures-1, extrapolating the map."""
    out = []
    start = 0
    mm = dict(meter_map)
    ts = meter_map[0][1]
    for i in range(n_measures):
        ts = mm.get(i, ts)
        out.append((start, ts))
        start += _ticks(measure_capacity(ts), f"measure {i}")
    return out


def _measure_of(meter_map, tick):
    start = 0
    ts = meter_map[0][1]
    mm = dict(meter_map)
    i = 0
    while True:
        ts = mm.get(i, ts)
        cap = _ticks(measure_capacity(ts), f"measure {i}")
        if tick < start + cap:
            return i
        start += cap
        i += 1


def beat_ticks(ts: TimeSignature) -> int:
    """Grid ticks per beat unit; a quarter-note beat is 24 ticks."""
    t = Fraction(4, ts.beat_unit) * TICKS_PER_QUARTER
    if t.denominator != 1:
        raise OffGridError(f"beat unit {ts.beat_unit} off the grid")
    return int(t)


# --- tokenization ----------------------------------------------------------

def _require_grid(ev: NoteLevelEvent):
    if ev.onset != int(ev.onset) or ev.duration != int(ev.duration):
        raise OffGridError(f"event {ev} is off-grid; snap_to_grid first")
    if ev.onset < 0 or ev.duration < 1:
        raise OffGridError(f"event {ev} has bad onset/duration")


def tokenize_notelevel(seq: NoteLevelSeq, emit_beats: bool = True) -> TokenSeq:
    """Render events as bar/beat/pos/note/len tokens.

    ``pos`` is the tick offset from the latest bar or beat token and is
    omitted when zero; simultaneous notes share one pos. With
    ``emit_beats=False`` (plain-REMI mode) offsets count from the bar.
    """
    events = sorted(seq.events, key=lambda e: e.sort_key)
    for ev in events:
        _require_grid(ev)
    out = []
    if not events:
        return TokenSeq(out, level="note")
    n_measures = _measure_of(seq.meter_map, int(events[-1].onset)) + 1
    times = _measure_times(seq.meter_map, n_measures)
    idx = 0
    for mi, (mstart, ts) in enumerate(times):
        cap = _ticks(measure_capacity(ts), f"measure {mi}")
        bt = beat_ticks(ts)
        out.append("bar")
        anchors = (
            [mstart + b * bt for b in range(ts.beats)] if emit_beats else [mstart]
        )
        spans = list(zip(anchors, anchors[1:] + [mstart + cap]))
        for b, (astart, aend) in enumerate(spans):
            if b > 0:
                out.append("beat")
            group_onset = None
            while idx < len(events) and astart <= events[idx].onset < aend:
                ev = events[idx]
                onset = int(ev.onset)
                if onset != group_onset:
                    group_onset = onset
                    offset = onset - astart
                    if offset:
                        out.append(f"pos_{offset}")
                out.append(f"note_{ev.pitch}")
                out.append(f"len_{int(ev.duration)}")
                idx += 1
        if idx >= len(events):
            break
    return TokenSeq(out, level="note")


def detokenize_notelevel(
    seq: TokenSeq, meter_map, emit_beats: bool = True
) -> NoteLevelSeq:
    """Strict inverse of ``tokenize_notelevel``; the diagnostic test oracle.

    Raises ValueError on any grammar violation instead of recovering.
    """
    events = []
    measure = -1
    beat = 0
    offset = 0
    mstart = 0
    next_start = 0
    ts = meter_map[0][1]
    mm = dict(meter_map)
    pending_pitch: Optional[int] = None
    for token in seq.tokens:
        head, _, payload = token.partition("_")
        if pending_pitch is not None and head != "len":
            raise ValueError(f"note without len before {token!r}")
        if token == "bar":
            measure += 1
            ts = mm.get(measure, ts)
            mstart = next_start
            next_start = mstart + _ticks(measure_capacity(ts), f"measure {measure}")
            beat = 0
            offset = 0
        elif token == "beat":
            if measure < 0 or not emit_beats:
                raise ValueError("beat token outside a measure")
            beat += 1
            if beat >= ts.beats:
                raise ValueError(f"measure {measure} has too many beats")
            offset = 0
        elif head == "pos":
            offset = int(payload)
            if offset < 1:
                raise ValueError(f"bad pos token {token!r}")
        elif head == "note":
            if measure < 0:
                raise ValueError("note before the first bar")
            pending_pitch = int(payload)
        elif head == "len":
            if pending_pitch is None:
                raise ValueError(f"len token {token!r} without a note")
            onset = mstart + beat * beat_ticks(ts) + offset
            events.append(NoteLevelEvent(onset, pending_pitch, int(payload)))
            pending_pitch = None
        else:
            raise ValueError(f"unknown note-level token {token!r}")
    if pending_pitch is not None:
        raise ValueError("trailing note without len")
    events.sort(key=lambda e: e.sort_key)
    return NoteLevelSeq(events, list(meter_map))


# --- perturbation ----------------------------------------------------------

@dataclass(frozen=True)
class PerturbParams:
    """Duration-proportional normal noise; defaults are the production values
    (onset sigma 0.08; duration mean 0.8, sigma 0.24)."""

    onset_mu: float = 0.0
    onset_sigma: float = 0.08
    dur_mu: float = 0.8
    dur_sigma: float = 0.24
    seed: int = 0

    def __post_init__(self):
        if self.onset_sigma < 0 or self.dur_sigma < 0:
            raise ValueError("sigma must be non-negative")


def perturb(seq: NoteLevelSeq, params: PerturbParams) -> NoteLevelSeq:
    """Add noise scaled by each note's duration; output may be off-grid.

    For each event with duration d: onset += d * N(onset_mu, onset_sigma) and
    duration += d * N(dur_mu, dur_sigma), clamped to onset >= 0 and
    duration >= 1. Two draws per event in input order, so a fixed seed
    reproduces the output byte-for-byte.
    """
    rng = random.Random(params.seed)
    out = []
    for ev in seq.events:
        d = ev.duration
        onset = max(0.0, ev.onset + d * rng.gauss(params.onset_mu, params.onset_sigma))
        dur = max(1.0, ev.duration + d * rng.gauss(params.dur_mu, params.dur_sigma))
        out.append(replace(ev, onset=onset, duration=dur))
    out.sort(key=lambda e: e.sort_key)
    return NoteLevelSeq(out, list(seq.meter_map))


def snap_to_grid(seq: NoteLevelSeq) -> NoteLevelSeq:
    """Round every onset/duration to the nearest tick (ties to even),
    flooring durations at 1 tick and onsets at 0."""
    out = []
    for ev in seq.events:
        onset = max(0, round(ev.onset))
        dur = max(1, round(ev.duration))
        out.append(NoteLevelEvent(onset, ev.pitch, dur))
    out.sort(key=lambda e: e.sort_key)
    return NoteLevelSeq(out, list(seq.meter_map))


# --- standard MIDI file export ---------------------------------------------

def _varlen(value: int) -> bytes:
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(chunks))


def write_midi(seq: NoteLevelSeq, path):
    """Write a format-0 SMF at 24 PPQN with the meter map as time-signature
    meta events. Velocities are fixed; this is an interchange convenience."""
    msgs = []  # (tick, order, bytes)
    n_measures = max((e[0] for e in seq.meter_map), default=0) + 1
    for (mstart, ts) in _measure_times(seq.meter_map, n_measures):
        denom_log2 = ts.beat_unit.bit_length() - 1
        msgs.append((mstart, 0, bytes([0xFF, 0x58, 0x04, ts.beats, denom_log2, 24, 8])))
    for ev in seq.events:
        _require_grid(ev)
        onset, dur = int(ev.onset), int(ev.duration)
        msgs.append((onset + dur, 1, bytes([0x80, ev.pitch, 0])))
        msgs.append((onset, 2, bytes([0x90, ev.pitch, 64])))
    msgs.sort(key=lambda m: (m[0], m[1]))
    track = bytearray()
    clock = 0
    for tick, _, data in msgs:
        track += _varlen(tick - clock)
        track += data
        clock = tick
    track += _varlen(0) + bytes([0xFF, 0x2F, 0x00])
    with open(path, "wb") as fh:
        fh.write(b"MThd" + struct.pack(">IHHH", 6, 0, 1, TICKS_PER_QUARTER))
        fh.write(b"MTrk" + struct.pack(">I", len(track)) + bytes(track))
