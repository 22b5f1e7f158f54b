import shutil
import subprocess

import pytest


def run_scoretok(*args):
    """The primary toolkit is reached only through its CLI; the token files
    are the interface boundary."""
    exe = shutil.which("scoretok")
    if exe is None:
        pytest.skip("scoretok CLI not installed")
    return subprocess.run(
        [exe, *map(str, args)], capture_output=True, text=True, check=False
    )


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    """32 training pairs of one-measure slices, built with the upstream CLI."""
    root = tmp_path_factory.mktemp("toy")
    songs = root / "songs"
    corpus = root / "corpus"
    assert run_scoretok("synth", "-o", songs, "--songs", 10,
                        "--seed", 20260810, "--measures", 4).returncode == 0
    assert run_scoretok("corpus-split", songs, "-o", root / "manifest.json",
                        "--seed", 1).returncode == 0
    assert run_scoretok("build-pairs", "--manifest", root / "manifest.json",
                        "--songs", songs, "-o", corpus,
                        "--slice-measures", 1).returncode == 0
    n_train = len((corpus / "train" / "input.tokens").read_text().splitlines())
    assert n_train == 32
    return corpus


def tiny_corpus(tmp_path, n_pairs=8):
    """Handwritten short pairs for fast unit tests (no upstream needed)."""
    pitches = [60, 62, 64, 65, 67, 69, 71, 72]
    (tmp_path / "train").mkdir(parents=True, exist_ok=True)
    (tmp_path / "validation").mkdir(exist_ok=True)
    inputs, targets = [], []
    for i in range(n_pairs):
        p = pitches[i % len(pitches)]
        inputs.append(f"bar note_{p} len_24 beat note_{p + 2} len_12")
        targets.append(
            f"R clef_treble key_natural time_2/4 <voice> note_C{4 + i % 3} len_1 "
            f"rest len_1 </voice> bar"
        )
    for split, k in (("train", n_pairs), ("validation", 2)):
        (tmp_path / split / "input.tokens").write_text(
            "".join(l + "\n" for l in inputs[:k])
        )
        (tmp_path / split / "target.tokens").write_text(
            "".join(l + "\n" for l in targets[:k])
        )
    return tmp_path
