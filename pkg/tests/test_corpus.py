import filecmp
from fractions import Fraction

import pytest

from scoretok.corpus import CorpusManifest, build_pairs, segment, split_songs
from scoretok.notelevel import PerturbParams, downconvert
from scoretok.score import KeySignature, TimeSignature, validate_score
from scoretok.synth import random_song
from scoretok.tokens import tokenize_score

from conftest import measure, note, rest, score


def flat_song(n_measures, time=TimeSignature(4, 4)):
    right = [measure([note("C4", 2), note("D4", 2)]) for _ in range(n_measures)]
    left = [measure([rest(4)]) for _ in range(n_measures)]
    return score(right, left, time=time)


class TestSegment:
    def test_twelve_measures_fixed_four(self):
        slices = segment(flat_song(12), "s", measures=4)
        assert [(sl.start, sl.end) for sl in slices] == [(0, 4), (4, 8), (8, 12)]

    def test_remainder_forms_short_slice(self):
        slices = segment(flat_song(10), "s", measures=4)
        assert [sl.end - sl.start for sl in slices] == [4, 4, 2]

    def test_system_breaks_policy(self):
        slices = segment(flat_song(10), "s", system_breaks=[3, 7])
        assert [(sl.start, sl.end) for sl in slices] == [(0, 3), (3, 7), (7, 10)]

    def test_requires_exactly_one_policy(self):
        with pytest.raises(ValueError):
            segment(flat_song(4), "s")
        with pytest.raises(ValueError):
            segment(flat_song(4), "s", measures=4, system_breaks=[2])

    def test_bad_measure_count_rejected(self):
        with pytest.raises(ValueError):
            segment(flat_song(4), "s", measures=0)

    def test_slices_are_valid_and_cover_song(self):
        for seed in range(10):
            song = random_song(seed, n_measures=11)
            slices = segment(song, "s", measures=4)
            assert [sl.start for sl in slices] == [0, 4, 8]
            assert slices[-1].end == 11
            for sl in slices:
                assert validate_score(sl.score).ok, (seed, sl.index)

    def test_tie_free_slices_reproduce_measures(self):
        song = flat_song(8)
        slices = segment(song, "s", measures=4)
        rebuilt = [m for sl in slices for m in sl.score.right]
        assert tuple(rebuilt) == song.right

    def test_key_change_becomes_slice_initial(self):
        right = [measure([rest(4)]) for _ in range(8)]
        right[5] = measure([rest(4)], key=KeySignature("flat", 3))
        left = [measure([rest(4)]) for _ in range(8)]
        song = score(right, left)
        slices = segment(song, "s", measures=4)
        # measure 5 sits inside slice 1; slice 1 starts with the old key
        assert slices[1].score.right_attrs.key == KeySignature("natural", 0)
        assert slices[1].score.right[1].key_change == KeySignature("flat", 3)
        # a change ON a boundary folds into the next slice's initial attrs
        right2 = [measure([rest(4)]) for _ in range(8)]
        right2[4] = measure([rest(4)], key=KeySignature("flat", 3))
        song2 = score(right2, left)
        sl2 = segment(song2, "s", measures=4)[1]
        assert sl2.score.right_attrs.key == KeySignature("flat", 3)
        assert sl2.score.right[0].key_change is None

    def test_attribute_correctness_against_whole_score(self):
        from scoretok.score import staff_attribute_timeline

        for seed in range(8):
            song = random_song(seed + 50, n_measures=10)
            whole = list(staff_attribute_timeline(song.right, song.right_attrs))
            for sl in segment(song, "s", measures=3):
                local = list(
                    staff_attribute_timeline(sl.score.right, sl.score.right_attrs)
                )
                for offset, (_, clef, key, time) in enumerate(local):
                    _, w_clef, w_key, w_time = whole[sl.start + offset]
                    assert (clef, key, time) == (w_clef, w_key, w_time)

    def test_boundary_tie_split_conserves_duration(self):
        right = [
            measure([rest(2), note("C4", 2, tie="start")]),
            measure([note("C4", 4, tie="continue")]),
            measure([note("C4", 2, tie="stop"), rest(2)]),
            measure([rest(4)]),
        ]
        left = [measure([rest(4)]) for _ in range(4)]
        song = score(right, left)
        whole_total = sum(e.duration for e in downconvert(song).events)
        slices = segment(song, "s", measures=2)
        split_total = 0
        for sl in slices:
            nl = downconvert(sl.score)  # must not raise dangling-tie
            split_total += sum(e.duration for e in nl.events)
        assert split_total == whole_total
        # slice 0 keeps a two-link chain ending in tie_stop; slice 1's lone
        # stub has nothing left to tie to, so its mark is dropped
        assert slices[0].score.right[1].voices[0].events[0].tie == "stop"
        assert slices[1].score.right[0].voices[0].events[0].tie is None
        # single-measure slices: the middle link unties on both sides
        singles = segment(song, "s", measures=1)
        assert singles[1].score.right[0].voices[0].events[0].tie is None
        assert validate_score(singles[1].score).ok
        total_single = sum(
            sum(e.duration for e in downconvert(sl.score).events) for sl in singles
        )
        assert total_single == whole_total


class TestSplit:
    def test_eight_one_one_on_ten_songs(self):
        manifest = split_songs([f"s{i}" for i in range(10)], seed=42)
        counts = {k: 0 for k in ("train", "validation", "test")}
        for split in manifest.songs.values():
            counts[split] += 1
        assert counts == {"train": 8, "validation": 1, "test": 1}

    def test_deterministic_for_seed(self):
        songs = [f"s{i}" for i in range(30)]
        assert split_songs(songs, seed=7).songs == split_songs(songs, seed=7).songs

    def test_different_seed_same_sizes(self):
        songs = [f"s{i}" for i in range(30)]
        a = split_songs(songs, seed=1)
        b = split_songs(songs, seed=2)
        assert a.songs != b.songs
        for split in ("train", "validation", "test"):
            assert sum(1 for v in a.songs.values() if v == split) == \
                sum(1 for v in b.songs.values() if v == split)

    def test_large_corpus_ratio(self):
        manifest = split_songs([f"s{i:05d}" for i in range(7161)], seed=0)
        counts = {k: 0 for k in ("train", "validation", "test")}
        for split in manifest.songs.values():
            counts[split] += 1
        assert counts["validation"] == 716
        assert counts["test"] == 716
        assert counts["train"] == 5729

    def test_too_few_songs(self):
        with pytest.raises(ValueError):
            split_songs(["a", "b"])

    def test_manifest_json_round_trip(self):
        manifest = split_songs([f"s{i}" for i in range(10)], seed=3)
        again = CorpusManifest.from_json(manifest.to_json())
        assert again.songs == manifest.songs
        assert again.seed == manifest.seed


class TestBuildPairs:
    @pytest.fixture
    def songs(self):
        return {f"song{i:02d}": random_song(i, n_measures=8) for i in range(6)}

    def test_paired_files_line_aligned(self, songs, tmp_path):
        manifest = split_songs(songs, seed=1)
        manifest = build_pairs(songs, manifest, tmp_path, measures=4)
        for split in ("train", "validation", "test"):
            inp = (tmp_path / split / "input.tokens").read_text().splitlines()
            tgt = (tmp_path / split / "target.tokens").read_text().splitlines()
            assert len(inp) == len(tgt)
        assert (tmp_path / "manifest.json").exists()
        assert len(manifest.slices) == 12  # 6 songs x 2 slices
        assert manifest.skipped == []

    def test_rebuild_is_byte_identical(self, songs, tmp_path):
        m1 = split_songs(songs, seed=5)
        build_pairs(songs, m1, tmp_path / "a", measures=4,
                    perturb_params=PerturbParams(seed=9))
        m2 = split_songs(songs, seed=5)
        build_pairs(songs, m2, tmp_path / "b", measures=4,
                    perturb_params=PerturbParams(seed=9))
        for split in ("train", "validation", "test"):
            for name in ("input.tokens", "target.tokens"):
                assert filecmp.cmp(tmp_path / "a" / split / name,
                                   tmp_path / "b" / split / name, shallow=False)
        assert (tmp_path / "a" / "manifest.json").read_bytes() == \
            (tmp_path / "b" / "manifest.json").read_bytes()

    def test_perturbation_changes_input_not_target(self, songs, tmp_path):
        m = split_songs(songs, seed=2)
        build_pairs(songs, m, tmp_path / "clean", measures=4)
        m2 = split_songs(songs, seed=2)
        build_pairs(songs, m2, tmp_path / "noisy", measures=4,
                    perturb_params=PerturbParams(seed=3))
        assert (tmp_path / "clean" / "train" / "input.tokens").read_text() != \
            (tmp_path / "noisy" / "train" / "input.tokens").read_text()
        assert (tmp_path / "clean" / "train" / "target.tokens").read_text() == \
            (tmp_path / "noisy" / "train" / "target.tokens").read_text()

    def test_undownconvertible_slice_skipped_and_logged(self, tmp_path):
        bad_right = [measure([note("C4", 4, tie="start")]), measure([note("D4", 4)])]
        bad_left = [measure([rest(4)]), measure([rest(4)])]
        scores = {
            "bad": score(bad_right, bad_left),
            "ok1": flat_song(4),
            "ok2": flat_song(4),
        }
        manifest = split_songs(scores, seed=1)
        manifest = build_pairs(scores, manifest, tmp_path, measures=4)
        assert len(manifest.skipped) == 1
        assert manifest.skipped[0]["song"] == "bad"
        assert "tie" in manifest.skipped[0]["reason"]

    def test_no_song_spans_two_splits(self, songs, tmp_path):
        manifest = split_songs(songs, seed=4)
        manifest = build_pairs(songs, manifest, tmp_path, measures=4)
        seen = {}
        for entry in manifest.slices:
            seen.setdefault(entry["song"], set()).add(entry["split"])
        assert all(len(v) == 1 for v in seen.values())
