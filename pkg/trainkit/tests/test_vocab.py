import json

import pytest

from trainkit.vocab import BOS, EOS, PAD, SPECIALS, UNK, Vocab, build_vocab


def test_specials_at_fixed_indices():
    v = build_vocab(["a b c"])
    assert (PAD, BOS, EOS, UNK) == (0, 1, 2, 3)
    assert v.tokens[:4] == list(SPECIALS)


def test_identical_corpora_identical_tables():
    lines = ["note_60 len_24", "bar note_62 len_12"]
    assert build_vocab(lines).tokens == build_vocab(list(lines)).tokens


def test_encode_decode_round_trip():
    v = build_vocab(["bar note_60 len_24"])
    ids = v.encode(["bar", "note_60", "len_24"])
    assert v.decode(ids) == ["bar", "note_60", "len_24"]
    assert all(i >= len(SPECIALS) for i in ids)


def test_unknown_maps_to_unk():
    v = build_vocab(["bar"])
    assert v.encode(["mystery"]) == [UNK]
    assert v.unk_tokens(["bar", "mystery"]) == ["mystery"]


def test_extra_inventory_merged():
    v = build_vocab(["bar"], extra=["time_3/4", "time_4/4"])
    assert "time_3/4" in v.index


def test_serialization_round_trip(tmp_path):
    v = build_vocab(["a b c d"])
    path = tmp_path / "vocab.json"
    path.write_text(json.dumps(v.tokens))
    again = Vocab(json.loads(path.read_text()))
    assert again.tokens == v.tokens
    assert again.encode(["c"]) == v.encode(["c"])


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        build_vocab([])
