"""Note-wise comparison of an original score against a generated one.

Notes (chords flattened to noteheads) and rests are aligned by exact
position and pitch, then twelve aspects are counted in affected notes:
deletions, insertions, staff assignment, voice grouping, clef, key
signature, time signature, pitch spelling, notated duration, stem
direction, beams, and ties. Attribute aspects (clef/key/time) charge every
original note and rest inside a disagreeing region. Rates are percentages
of the original note+rest count, so insertion rates may exceed 100.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .score import NoteEvent, RestEvent, Score, staff_attribute_timeline

ASPECTS = (
    "note_deletion",
    "note_insertion",
    "staff_assignment",
    "voice",
    "clef",
    "key_signature",
    "time_signature",
    "pitch_spelling",
    "note_duration",
    "stem_direction",
    "beams",
    "ties",
)

CATEGORIES = {
    "note_preservation": ("note_deletion", "note_insertion"),
    "note_segregation": ("staff_assignment", "voice"),
    "score_attributes": ("clef", "key_signature", "time_signature"),
    "note_attributes": (
        "pitch_spelling",
        "note_duration",
        "stem_direction",
        "beams",
        "ties",
    ),
}


class EmptyScoreError(ValueError):
    """Rates are undefined over a score with no notes or rests."""


@dataclass(frozen=True)
class NoteRef:
    staff: str
    measure: int
    onset: Fraction
    voice: int
    pitch: object
    duration: Fraction
    stem: Optional[str]
    beams: Optional[tuple]
    tie: Optional[str]

    @property
    def align_key(self):
        return (self.measure, self.onset, self.pitch.midi)

    @property
    def identity(self):
        # Positional identity used for voice-companion comparison.
        return (self.measure, self.onset, self.pitch.midi)


@dataclass(frozen=True)
class RestRef:
    staff: str
    measure: int
    onset: Fraction
    voice: int
    duration: Fraction

    @property
    def align_key(self):
        return (self.measure, self.onset, self.duration)


def _flatten(score: Score) -> Tuple[List[NoteRef], List[RestRef]]:
    notes, rests = [], []
    for staff_name, measures, _attrs in score.staves():
        for mi, m in enumerate(measures):
            for vi, voice in enumerate(m.voices):
                pos = Fraction(0)
                for ev in voice.events:
                    if isinstance(ev, NoteEvent):
                        for p in ev.pitches:
                            notes.append(
                                NoteRef(
                                    staff_name, mi, pos, vi, p, ev.duration,
                                    ev.stem, ev.beams, ev.tie,
                                )
                            )
                    else:
                        rests.append(RestRef(staff_name, mi, pos, vi, ev.duration))
                    pos += ev.duration
    return notes, rests


@dataclass
class Alignment:
    matched_notes: list = field(default_factory=list)
    matched_rests: list = field(default_factory=list)
    deleted_notes: list = field(default_factory=list)
    deleted_rests: list = field(default_factory=list)
    inserted_notes: list = field(default_factory=list)
    inserted_rests: list = field(default_factory=list)

    @property
    def deletions(self) -> int:
        return len(self.deleted_notes) + len(self.deleted_rests)

    @property
    def insertions(self) -> int:
        return len(self.inserted_notes) + len(self.inserted_rests)


def _match_bucket(orig_items, gen_items, matched, leftovers_o, leftovers_g):
    """Pair same-key items, same staff first, then remaining in voice order."""
    gen_pool = list(gen_items)
    unpaired = []
    for o in orig_items:
        hit = next((g for g in gen_pool if g.staff == o.staff), None)
        if hit is not None:
            matched.append((o, hit))
            gen_pool.remove(hit)
        else:
            unpaired.append(o)
    for o in unpaired:
        if gen_pool:
            matched.append((o, gen_pool.pop(0)))
        else:
            leftovers_o.append(o)
    leftovers_g.extend(gen_pool)


def align_notes(orig: Score, gen: Score) -> Alignment:
    """Greedy exact alignment on (measure, onset-in-measure, MIDI pitch);
    staff-agnostic, with same-staff pairs preferred inside a collision.
    Rests align by (measure, onset, duration) the same way."""
    a = Alignment()
    o_notes, o_rests = _flatten(orig)
    g_notes, g_rests = _flatten(gen)
    for kind in ("note", "rest"):
        orig_refs, gen_refs = {}, {}
        items_o = o_notes if kind == "note" else o_rests
        items_g = g_notes if kind == "note" else g_rests
        for ref in items_o:
            orig_refs.setdefault(ref.align_key, []).append(ref)
        for ref in items_g:
            gen_refs.setdefault(ref.align_key, []).append(ref)
        matched = a.matched_notes if kind == "note" else a.matched_rests
        deleted = a.deleted_notes if kind == "note" else a.deleted_rests
        inserted = a.inserted_notes if kind == "note" else a.inserted_rests
        for key in sorted(set(orig_refs) | set(gen_refs), key=_key_sort):
            _match_bucket(
                orig_refs.get(key, ()), gen_refs.get(key, ()), matched, deleted, inserted
            )
    return a


def _key_sort(key):
    return tuple(float(x) if isinstance(x, Fraction) else x for x in key)


def _companions(notes: List[NoteRef], included) -> Dict[Tuple, Counter]:
    """Co-voiced companion multisets per note, restricted to ``included``
    (the matched notes), so deletions and insertions do not bleed into the
    voice-grouping aspect."""
    by_voice: Dict[Tuple, List[NoteRef]] = {}
    for n in notes:
        by_voice.setdefault((n.staff, n.measure, n.voice), []).append(n)
    out = {}
    for members in by_voice.values():
        keys = Counter(m.identity for m in members if m in included)
        for m in members:
            mine = keys.copy()
            if m in included:
                mine[m.identity] -= 1
                if not mine[m.identity]:
                    del mine[m.identity]
            # NoteRefs are positionally unique, so the ref itself is the key.
            out[m] = mine
    return out


def _attr_regions(score: Score) -> Dict[Tuple[str, int], tuple]:
    """(staff, measure) -> (clef, key, time) in effect."""
    out = {}
    for staff_name, measures, attrs in score.staves():
        for i, clef, key, time in staff_attribute_timeline(measures, attrs):
            out[(staff_name, i)] = (clef, key, time)
    return out


def count_aspects(alignment: Alignment, orig: Score, gen: Score) -> Dict[str, int]:
    counts = {aspect: 0 for aspect in ASPECTS}
    counts["note_deletion"] = alignment.deletions
    counts["note_insertion"] = alignment.insertions

    for o, g in alignment.matched_notes + alignment.matched_rests:
        if o.staff != g.staff:
            counts["staff_assignment"] += 1

    o_notes, _ = _flatten(orig)
    g_notes, _ = _flatten(gen)
    comp_o = _companions(o_notes, {o for o, _ in alignment.matched_notes})
    comp_g = _companions(g_notes, {g for _, g in alignment.matched_notes})
    for o, g in alignment.matched_notes:
        if comp_o[o] != comp_g[g]:
            counts["voice"] += 1
        if o.pitch != g.pitch:
            counts["pitch_spelling"] += 1
        if o.duration != g.duration:
            counts["note_duration"] += 1
        if o.stem != g.stem:
            counts["stem_direction"] += 1
        if o.beams != g.beams:
            counts["beams"] += 1
        if o.tie != g.tie:
            counts["ties"] += 1

    # Wrong clef/key/time charges every original note and rest it governs.
    regions_o = _attr_regions(orig)
    regions_g = _attr_regions(gen)
    o_all_notes, o_all_rests = _flatten(orig)
    for ref in list(o_all_notes) + list(o_all_rests):
        where = (ref.staff, ref.measure)
        got = regions_g.get(where)
        want = regions_o[where]
        for slot, aspect in ((0, "clef"), (1, "key_signature"), (2, "time_signature")):
            if got is None or want[slot] != got[slot]:
                counts[aspect] += 1
    return counts


def _gen_specifies_stems(gen: Score) -> bool:
    notes, _ = _flatten(gen)
    return any(n.stem is not None for n in notes)


@dataclass
class MetricReport:
    counts: Dict[str, int]
    total: int
    stem_excluded: bool

    def rate(self, aspect: str) -> float:
        return 100.0 * self.counts[aspect] / self.total

    def _included(self, aspects) -> list:
        return [a for a in aspects if not (a == "stem_direction" and self.stem_excluded)]

    @property
    def rates(self) -> Dict[str, Optional[float]]:
        return {
            a: (None if a == "stem_direction" and self.stem_excluded else self.rate(a))
            for a in ASPECTS
        }

    @property
    def categories(self) -> Dict[str, float]:
        out = {}
        for name, members in CATEGORIES.items():
            inc = self._included(members)
            out[name] = sum(self.rate(a) for a in inc) / len(inc)
        return out

    @property
    def average(self) -> float:
        inc = self._included(ASPECTS)
        return sum(self.rate(a) for a in inc) / len(inc)

    @property
    def category_average(self) -> float:
        cats = self.categories
        return sum(cats.values()) / len(cats)

    def to_dict(self) -> dict:
        rates = {
            a: (None if v is None else round(v, 2)) for a, v in self.rates.items()
        }
        return {
            "rates": rates,
            "categories": {k: round(v, 2) for k, v in self.categories.items()},
            "average": round(self.average, 2),
            "category_average": round(self.category_average, 2),
            "counts": dict(self.counts),
            "total": self.total,
            "stem_direction_excluded": self.stem_excluded,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def build_report(counts: Dict[str, int], orig: Score, *, stem_excluded: bool) -> MetricReport:
    o_notes, o_rests = _flatten(orig)
    total = len(o_notes) + len(o_rests)
    if total == 0:
        raise EmptyScoreError("original score has no notes or rests")
    return MetricReport(dict(counts), total, stem_excluded)


def evaluate(orig: Score, gen: Score) -> MetricReport:
    alignment = align_notes(orig, gen)
    counts = count_aspects(alignment, orig, gen)
    return build_report(counts, orig, stem_excluded=not _gen_specifies_stems(gen))


def aggregate(reports: List[MetricReport]) -> MetricReport:
    """Corpus-level report: rates from summed counts, not averaged rates."""
    if not reports:
        raise EmptyScoreError("no reports to aggregate")
    counts = {aspect: sum(r.counts[aspect] for r in reports) for aspect in ASPECTS}
    total = sum(r.total for r in reports)
    stem_excluded = all(r.stem_excluded for r in reports)
    return MetricReport(counts, total, stem_excluded)
