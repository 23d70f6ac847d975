"""Shared plumbing: atomic writes, seed derivation, error taxonomy."""

from __future__ import annotations

import json

import pytest

from fairtrial import errors
from fairtrial.ioutil import open_write, write_json
from fairtrial.seeding import mix_seed, splitmix64


# --- atomic writes ----------------------------------------------------------


def test_open_write_replaces_atomically(tmp_path):
    path = tmp_path / "out.txt"
    path.write_text("old\n")
    with open_write(path) as f:
        f.write("new\n")
    assert path.read_text() == "new\n"
    assert list(tmp_path.iterdir()) == [path]  # no temp files left behind


def test_open_write_failure_keeps_old_content(tmp_path):
    path = tmp_path / "out.txt"
    path.write_text("old\n")
    with pytest.raises(RuntimeError):
        with open_write(path) as f:
            f.write("partial")
            raise RuntimeError("boom")
    assert path.read_text() == "old\n"
    assert list(tmp_path.iterdir()) == [path]


def test_write_json_shape(tmp_path):
    path = tmp_path / "doc.json"
    write_json(path, {"b": 1, "a": [1, 2]})
    text = path.read_text()
    assert text.endswith("\n")
    assert json.loads(text) == {"a": [1, 2], "b": 1}
    assert text.index('"a"') < text.index('"b"')  # keys are sorted


def test_open_write_passes_streams_through(tmp_path):
    import io

    buf = io.StringIO()
    with open_write(buf) as f:
        f.write("x")
    assert buf.getvalue() == "x"


# --- seed derivation --------------------------------------------------------


def test_splitmix64_is_64_bit():
    for x in (0, 1, (1 << 64) - 1):
        y = splitmix64(x)
        assert 0 <= y < (1 << 64)
    assert splitmix64(0) != splitmix64(1)


def test_mix_seed_deterministic():
    assert mix_seed(7, "speaker", "s001") == mix_seed(7, "speaker", "s001")


def test_mix_seed_sensitivity():
    base = mix_seed(7, "speaker", "s001")
    assert mix_seed(8, "speaker", "s001") != base
    assert mix_seed(7, "speaker", "s002") != base
    assert mix_seed(7, "recording", "s001") != base
    assert mix_seed(7, "s001") != base


def test_mix_seed_key_boundaries_matter():
    # concatenation must not alias: ("ab", "c") vs ("a", "bc")
    assert mix_seed(0, "ab", "c") != mix_seed(0, "a", "bc")
    assert mix_seed(0, "abc") != mix_seed(0, "ab", "c")


def test_mix_seed_long_keys():
    a = mix_seed(3, "utterance", "spk/" + "x" * 100 + "/a.wav")
    b = mix_seed(3, "utterance", "spk/" + "x" * 100 + "/b.wav")
    assert a != b
    assert 0 <= a < (1 << 64)


# --- error taxonomy ---------------------------------------------------------


def test_all_errors_share_the_base():
    for name in ("FormatError", "DuplicateKeyError", "CorpusError", "GradingError",
                 "GenerationError", "ScoreError", "MetricError"):
        cls = getattr(errors, name)
        assert issubclass(cls, errors.FairtrialError)
    assert issubclass(errors.FairtrialError, Exception)
