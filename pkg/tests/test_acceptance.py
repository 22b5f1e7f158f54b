"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest -s`` to watch them stream)."""

import filecmp
import random
import statistics
import time
from fractions import Fraction

import pytest

from scoretok.corpus import build_pairs, split_songs
from scoretok.metric import align_notes, count_aspects, evaluate
from scoretok.musicxml import emit_musicxml, parse_musicxml
from scoretok.notelevel import (
    NoteLevelEvent,
    NoteLevelSeq,
    PerturbParams,
    beat_ticks,
    detokenize_notelevel,
    downconvert,
    perturb,
    tokenize_notelevel,
)
from scoretok.score import KeySignature, StaffAttributes, TimeSignature, TREBLE
from scoretok.synth import SynthStyle, random_score, random_song
from scoretok.tokens import (
    CONCATENATED,
    REGULAR,
    TokenSeq,
    concat_form,
    detokenize,
    expand_form,
    tokenize_score,
    validate_tokens,
)

from conftest import measure, note, rest, score

N_SCORES = 500


def announce(name: str, passed: bool = True):
    print(f"[{'PASS' if passed else 'FAIL'}] {name}")


@pytest.fixture(scope="module")
def corpus():
    return [random_score(seed) for seed in range(N_SCORES)]


class TestRoundTripFidelity:
    def test_corpus_covers_every_token_variation(self, corpus):
        tokens = set()
        two_voice = chord = multibeam = chain = False
        for s in corpus:
            toks = tokenize_score(s).tokens
            tokens.update(toks)
            text = " ".join(toks)
            two_voice = two_voice or "</voice> <voice>" in text
            chord = chord or any(
                a.startswith("note_") and b.startswith("note_")
                for a, b in zip(toks, toks[1:])
            )
            multibeam = multibeam or any(
                t.startswith("beam_") and len(t.split("_")) > 2 for t in toks
            )
            chain = chain or "tie_continue" in toks
        assert {"clef_treble", "clef_bass"} <= tokens
        keys = {t for t in tokens if t.startswith("key_")}
        assert len(keys) == 13, keys
        times = {t for t in tokens if t.startswith("time_")}
        assert len(times) >= 6, times
        assert two_voice and chord and multibeam and chain
        announce("corpus covers clefs, all key kinds/counts, >=6 meters, chords, "
                 "2-voice measures, multi-level beams, tie chains")

    def test_round_trip_both_forms(self, corpus):
        t0 = time.monotonic()
        for i, s in enumerate(corpus):
            for form in (REGULAR, CONCATENATED):
                seq = tokenize_score(s, form)
                rebuilt, report = detokenize(seq)
                assert report.ok, (i, form, report.render())
                assert rebuilt == s, (i, form)
        elapsed = time.monotonic() - t0
        assert elapsed < 60.0, f"round-trip suite took {elapsed:.1f}s"
        announce(f"round-trip fidelity: {N_SCORES} scores x 2 forms, "
                 f"100% exact with empty reports in {elapsed:.1f}s")


class TestFormBijection:
    def test_concat_expand_mutual_inverses(self, corpus):
        for i, s in enumerate(corpus):
            reg = tokenize_score(s, REGULAR)
            cat = concat_form(reg)
            assert expand_form(cat).tokens == reg.tokens, i
            assert concat_form(expand_form(cat)).tokens == cat.tokens, i
            assert cat.tokens == tokenize_score(s, CONCATENATED).tokens, i
        announce(f"form bijection: concat/expand mutual inverses on {N_SCORES} sequences")


class TestMusicXmlRoundTrip:
    def test_parse_emit_identity(self, corpus):
        for i, s in enumerate(corpus):
            rebuilt, _ = parse_musicxml(emit_musicxml(s))
            assert rebuilt == s, i
        announce(f"MusicXML round trip: parse(emit(s)) = s on {N_SCORES} scores")


class TestConcatenationEfficiency:
    def test_popular_corpus_ratio(self):
        from scoretok.metric import _flatten

        style = SynthStyle.popular()
        reg_total = cat_total = notes = with_both = 0
        for seed in range(80):
            s = random_score(10_000 + seed, n_measures=4, style=style)
            reg_total += len(tokenize_score(s, REGULAR))
            cat_total += len(tokenize_score(s, CONCATENATED))
            flat, _ = _flatten(s)
            notes += len(flat)
            with_both += sum(1 for n in flat if n.stem and n.beams)
        coverage = with_both / notes
        ratio = cat_total / reg_total
        assert coverage >= 0.80, coverage
        assert 0.60 <= ratio <= 0.75, ratio
        announce(f"concatenation efficiency: mean length ratio {ratio:.3f} in [0.60, 0.75] "
                 f"({coverage:.0%} of notes carry stem+beam)")


def _counts(orig, gen):
    return count_aspects(align_notes(orig, gen), orig, gen)


def _expect(**nonzero):
    from scoretok.metric import ASPECTS

    expected = {a: 0 for a in ASPECTS}
    expected.update(nonzero)
    return expected


def _metric_cases():
    """Twelve single-aspect corruptions with hand-counted affected notes."""
    def base_right():
        return [measure([note("C4", 1, stem="up"), note("D4", 1, stem="up"),
                         note("E4+G4", 2, stem="down")])]

    def base_left():
        return [measure([note("C3", 2, stem="down"), rest(2)])]

    cases = []

    gen = score([measure([note("C4", 1, stem="up"), note("D4", 1, stem="up"),
                          note("E4", 2, stem="down")])], base_left())
    cases.append(("note-deletion: chord member removed",
                  score(base_right(), base_left()), gen, _expect(note_deletion=1)))

    gen = score([measure([note("C4", 1, stem="up"), note("D4", 1, stem="up"),
                          note("E4+G4+B4", 2, stem="down")])], base_left())
    cases.append(("note-insertion: chord member added",
                  score(base_right(), base_left()), gen, _expect(note_insertion=1)))

    orig = score([measure([note("C4", 4, stem="up")], [rest(4)])],
                 [measure([note("G3", 4, stem="down")])])
    gen = score([measure([rest(4)])],
                [measure([note("G3", 4, stem="down")], [note("C4", 4, stem="up")])])
    cases.append(("staff-assignment: one note moved right to left",
                  orig, gen, _expect(staff_assignment=1)))

    orig = score([measure([note("C5", 2, stem="up"), note("D5", 2, stem="up")],
                          [note("E4", 2, stem="down"), note("F4", 2, stem="down")])],
                 [measure([rest(4)])])
    gen = score([measure([note("C5", 2, stem="up"), note("F4", 2, stem="down")],
                         [note("E4", 2, stem="down"), note("D5", 2, stem="up")])],
                [measure([rest(4)])])
    cases.append(("voice: second-half notes swapped between voices",
                  orig, gen, _expect(voice=4)))

    orig = score(base_right(), base_left())
    gen = score(base_right(), base_left())
    gen = gen.__class__(gen.right, gen.left, gen.right_attrs,
                        StaffAttributes(TREBLE, gen.left_attrs.key, gen.left_attrs.time))
    cases.append(("clef: wrong left-staff clef over 1 note + 1 rest... counted per object",
                  orig, gen, _expect(clef=2)))

    # wrong key over a 10-note, 2-rest passage: every governed object counts
    right = [
        measure([note(n, Fraction(1, 2), stem="up") for n in
                 ("C4", "D4", "E4", "F4", "G4", "A4", "B4", "C5")]),
        measure([note("F4", 1, stem="up"), note("G4", 1, stem="up"), rest(1), rest(1)]),
    ]
    left = [measure([rest(4)]), measure([rest(4)])]
    orig = score(right, left)
    gen = score(right, left)
    gen = gen.__class__(gen.right, gen.left,
                        StaffAttributes(gen.right_attrs.clef, KeySignature("sharp", 1),
                                        gen.right_attrs.time),
                        gen.left_attrs)
    cases.append(("key-signature: wrong key over a 10-note 2-rest passage",
                  orig, gen, _expect(key_signature=12)))

    orig = score([measure([note("G4", 4, stem="up")]), measure([note("C5", 4, stem="up")])],
                 [measure([rest(4)]), measure([rest(4)])])
    gen = score(
        [measure([note("G4", 4, stem="up")]),
         measure([note("C5", 3, stem="up")], time=TimeSignature(3, 4))],
        [measure([rest(4)]), measure([rest(3)], time=TimeSignature(3, 4))],
    )
    cases.append(("time-signature: second measure re-metered to 3/4",
                  orig, gen,
                  _expect(time_signature=2, note_duration=1,
                          note_deletion=1, note_insertion=1)))

    orig = score([measure([note("C#4", 1, stem="up"), note("D4", 1, stem="up"),
                           note("E4+G4", 2, stem="down")])], base_left())
    gen = score([measure([note("Db4", 1, stem="up"), note("D4", 1, stem="up"),
                          note("E4+G4", 2, stem="down")])], base_left())
    cases.append(("pitch-spelling: C#4 respelled Db4",
                  orig, gen, _expect(pitch_spelling=1)))

    orig = score([measure([note("C4", 1, stem="up"), note("D4", 1, stem="up"),
                           note("E4", 2, stem="up")])], base_left())
    gen = score([measure([note("C4", Fraction(1, 2), stem="up"), rest(Fraction(1, 2)),
                          note("D4", 1, stem="up"), note("E4", 2, stem="up")])],
                base_left())
    cases.append(("note-duration: quarter shortened to 8th plus rest",
                  orig, gen, _expect(note_duration=1, note_insertion=1)))

    gen = score([measure([note("C4", 1, stem="down"), note("D4", 1, stem="up"),
                          note("E4+G4", 2, stem="down")])], base_left())
    cases.append(("stem-direction: one stem flipped",
                  score(base_right(), base_left()), gen, _expect(stem_direction=1)))

    orig = score([measure([note("F4", Fraction(1, 2), stem="up", beams=("start",)),
                           note("G4", Fraction(1, 2), stem="up", beams=("stop",)),
                           rest(1), rest(2)])], base_left())
    gen = score([measure([note("F4", Fraction(1, 2), stem="up", beams=("start", "continue")),
                          note("G4", Fraction(1, 2), stem="up", beams=("stop",)),
                          rest(1), rest(2)])], base_left())
    cases.append(("beams: beam_start vs beam_start_continue",
                  orig, gen, _expect(beams=1)))

    orig = score(
        [measure([rest(2), note("C4", 2, stem="up", tie="start")]),
         measure([note("C4", 1, stem="up", tie="stop"), rest(1), rest(2)])],
        [measure([rest(4)]), measure([rest(4)])],
    )
    gen = score(
        [measure([rest(2), note("C4", 2, stem="up")]),
         measure([note("C4", 1, stem="up"), rest(1), rest(2)])],
        [measure([rest(4)]), measure([rest(4)])],
    )
    cases.append(("ties: barline tie removed (both ends differ)",
                  orig, gen, _expect(ties=2)))

    return cases


class TestMetricOracle:
    def test_identity_pair_scores_zero(self, simple_score):
        report = evaluate(simple_score, simple_score)
        assert all(v in (0.0, None) for v in report.rates.values())
        assert report.average == 0.0

    def test_twelve_hand_counted_corruptions(self):
        cases = _metric_cases()
        assert len(cases) == 12
        for name, orig, gen, expected in cases:
            got = _counts(orig, gen)
            assert got == expected, (name, got, expected)
        announce("metric oracle: 12 single-aspect corruptions match hand counts exactly; "
                 "identity pair scores 0.00")


class TestNoteLevelGrammar:
    def test_grammar_over_whole_corpus(self, corpus):
        for i, s in enumerate(corpus):
            nl = downconvert(s)
            seq = tokenize_notelevel(nl)
            toks = seq.tokens
            pos_values = [int(t.split("_")[1]) for t in toks if t.startswith("pos_")]
            assert all(1 <= p <= 23 for p in pos_values), (i, pos_values)
            # beat tokens per measure = beats-per-measure - 1
            mm = dict(nl.meter_map)
            ts = nl.meter_map[0][1]
            measure_idx = -1
            beats_seen = 0
            expected = []
            seen = []
            for t in toks:
                if t == "bar":
                    if measure_idx >= 0:
                        seen.append(beats_seen)
                    measure_idx += 1
                    ts = mm.get(measure_idx, ts)
                    expected.append(ts.beats - 1)
                    beats_seen = 0
                elif t == "beat":
                    beats_seen += 1
            if measure_idx >= 0:
                seen.append(beats_seen)
            assert seen == expected, i
            # the diagnostic detokenizer is an exact inverse
            back = detokenize_notelevel(seq, nl.meter_map)
            assert back.events == nl.events, i
        announce(f"note-level grammar: pos in 1..23, beat counts equal beats-1, "
                 f"detokenizer exact on {N_SCORES} scores")


class TestPerturbationStatistics:
    def test_ten_thousand_event_statistics(self):
        n = 10_000
        events = [NoteLevelEvent(1_000 + 200 * i, 60, 24) for i in range(n)]
        seq = NoteLevelSeq(events, [(0, TimeSignature(4, 4))])
        params = PerturbParams(seed=123)
        out = perturb(seq, params)

        onset_shifts = sorted(e.onset for e in out.events)
        norm_onsets = [(a - b.onset) / b.duration
                       for a, b in zip(onset_shifts, events)]
        norm_durs = [(e.duration - 24) / 24 for e in out.events]

        se_mean_on = 0.08 / n ** 0.5
        se_std_on = 0.08 / (2 * n) ** 0.5
        assert abs(statistics.mean(norm_onsets) - 0.0) <= 3 * se_mean_on
        assert abs(statistics.pstdev(norm_onsets) - 0.08) <= 3 * se_std_on

        se_mean_dur = 0.24 / n ** 0.5
        se_std_dur = 0.24 / (2 * n) ** 0.5
        assert abs(statistics.mean(norm_durs) - 0.8) <= 3 * se_mean_dur
        assert abs(statistics.pstdev(norm_durs) - 0.24) <= 3 * se_std_dur

        again = perturb(seq, PerturbParams(seed=123))
        assert again.events == out.events
        assert perturb(seq, PerturbParams(seed=124)).events != out.events
        announce("perturbation statistics: 10,000-event moments within 3 SE of "
                 "(0, 0.08) and (0.8, 0.24); fixed seed reproduces exactly")


class TestCorpusIntegrity:
    def test_hundred_song_split_and_rebuild(self, tmp_path):
        songs = {
            f"song{i:03d}": random_song(i, n_measures=8 + i % 5) for i in range(100)
        }
        manifest = split_songs(songs, seed=77)
        counts = {"train": 0, "validation": 0, "test": 0}
        for split in manifest.songs.values():
            counts[split] += 1
        assert counts == {"train": 80, "validation": 10, "test": 10}
        assert set(manifest.songs) == set(songs)  # zero leakage: one split per song

        params = PerturbParams(seed=5)
        build_pairs(songs, split_songs(songs, seed=77), tmp_path / "a",
                    measures=4, perturb_params=params)
        build_pairs(songs, split_songs(songs, seed=77), tmp_path / "b",
                    measures=4, perturb_params=params)
        for split in ("train", "validation", "test"):
            a_in = tmp_path / "a" / split / "input.tokens"
            a_tg = tmp_path / "a" / split / "target.tokens"
            assert len(a_in.read_text().splitlines()) == len(a_tg.read_text().splitlines())
            for name in ("input.tokens", "target.tokens"):
                assert filecmp.cmp(tmp_path / "a" / split / name,
                                   tmp_path / "b" / split / name, shallow=False)
        assert (tmp_path / "a" / "manifest.json").read_bytes() == \
            (tmp_path / "b" / "manifest.json").read_bytes()
        announce("corpus integrity: 100 songs split 80/10/10 song-wise, paired files "
                 "line-aligned, rebuild byte-identical")


def _corrupt(tokens, rng):
    """Apply one guaranteed-detectable corruption; returns (name, tokens)."""
    ops = []
    len_idx = [i for i, t in enumerate(tokens) if t.startswith("len_")]
    if len_idx:
        ops.append("delete-len")
    if "bar" in tokens:
        ops.append("delete-bar")
    if "</voice>" in tokens:
        ops.append("drop-voice-close")
    # A swapped pair followed by another note token would be re-absorbed as a
    # chord member and parse cleanly, so only detectable positions qualify.
    swap_idx = [i for i, (a, b) in enumerate(zip(tokens, tokens[1:]))
                if a.startswith("note_") and b.startswith("len_")
                and (i + 2 >= len(tokens) or not tokens[i + 2].startswith("note_"))]
    if swap_idx:
        ops.append("swap-note-len")
    if "L" in tokens:
        ops.append("drop-left-measure")
    op = rng.choice(ops)
    out = list(tokens)
    if op == "delete-len":
        del out[rng.choice(len_idx)]
    elif op == "delete-bar":
        bars = [i for i, t in enumerate(out) if t == "bar"]
        del out[rng.choice(bars)]
    elif op == "drop-voice-close":
        closes = [i for i, t in enumerate(out) if t == "</voice>"]
        del out[rng.choice(closes)]
    elif op == "swap-note-len":
        i = rng.choice(swap_idx)
        out[i], out[i + 1] = out[i + 1], out[i]
    else:  # drop-left-measure
        left = out.index("L")
        bars = [i for i in range(left, len(out)) if out[i] == "bar"]
        if len(bars) >= 2:
            del out[bars[-2] + 1: bars[-1] + 1]
        else:
            opens = [i for i in range(left, len(out)) if out[i] == "<voice>"]
            start = opens[0] if opens else bars[0]
            del out[start: bars[0] + 1]
    return op, out


class TestFormatErrorDetection:
    def test_corruptions_flagged_cleans_pass_no_crashes(self, corpus):
        rng = random.Random(424242)
        op_counts = {}
        for i, s in enumerate(corpus):
            seq = tokenize_score(s, REGULAR)
            assert validate_tokens(seq).ok, i  # 0% false positives
            op, corrupted = _corrupt(seq.tokens, rng)
            op_counts[op] = op_counts.get(op, 0) + 1
            bad = TokenSeq(corrupted, form=REGULAR)
            report = validate_tokens(bad)
            assert not report.ok, (i, op)  # 100% detection
            rebuilt, rec = detokenize(bad)  # recovery never crashes
            assert not rec.ok
            assert rebuilt is not None
        assert len(op_counts) == 5, op_counts  # every corruption kind exercised
        announce(f"format-error detection: 100% of {N_SCORES} corrupted sequences "
                 f"flagged ({op_counts}), 0% of clean, recovery never crashed")
