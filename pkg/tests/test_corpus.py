"""Corpus loading and validation, plus the per-nationality statistics table."""

from __future__ import annotations

import io

import pytest

from fairtrial.corpus import (
    Corpus,
    Speaker,
    Utterance,
    build_corpus,
    corpus_stats,
    group_label,
    load_metadata,
    load_utterances,
    normalize_gender,
    normalize_nationality,
    write_metadata,
    write_utterances,
)
from fairtrial.errors import CorpusError, DuplicateKeyError, FormatError

from helpers import make_corpus


def test_normalize_gender():
    assert normalize_gender("m") == "male"
    assert normalize_gender("Male") == "male"
    assert normalize_gender(" F ") == "female"
    assert normalize_gender("female") == "female"
    assert normalize_gender("nonbinary") == "unknown"
    assert normalize_gender("") == "unknown"


def test_normalize_nationality():
    assert normalize_nationality(" USA ") == "usa"
    assert normalize_nationality("United Kingdom") == "united kingdom"


def test_speaker_normalizes_on_construction():
    s = Speaker("a", "M", " UK ")
    assert s.gender == "male"
    assert s.nationality == "uk"
    assert s.group == ("male", "uk")


def test_speaker_group_none_when_ungroupable():
    assert Speaker("a", "x", "usa").group is None
    assert Speaker("a", "m", "  ").group is None


def test_load_metadata_csv():
    text = "speaker_id,gender,nationality\nid10001,m,USA\nid10002,F, United Kingdom \n"
    speakers = load_metadata(io.StringIO(text))
    assert speakers == [
        Speaker("id10001", "male", "usa"),
        Speaker("id10002", "female", "united kingdom"),
    ]


def test_load_metadata_tsv_and_extra_columns():
    text = "speaker_id\tname\tgender\tnationality\nid1\tAda\tf\tUK\n"
    speakers = load_metadata(io.StringIO(text))
    assert speakers == [Speaker("id1", "female", "uk")]


def test_load_metadata_missing_column():
    with pytest.raises(FormatError, match="nationality"):
        load_metadata(io.StringIO("speaker_id,gender\nid1,m\n"))


def test_load_metadata_duplicate_id():
    text = "speaker_id,gender,nationality\nid10003,m,usa\nid10003,f,uk\n"
    with pytest.raises(DuplicateKeyError, match="id10003"):
        load_metadata(io.StringIO(text))


def test_load_utterances():
    text = "id10001/abc123/00001.wav\n\nid10001/abc123/00002.wav\n"
    utts = load_utterances(io.StringIO(text))
    assert [u.rel_path for u in utts] == [
        "id10001/abc123/00001.wav",
        "id10001/abc123/00002.wav",
    ]
    assert utts[0].speaker_id == "id10001"
    assert utts[0].recording_id == "abc123"
    assert utts[0].utterance_id == utts[0].rel_path


def test_load_utterances_too_few_segments():
    with pytest.raises(FormatError, match="line 2"):
        load_utterances(io.StringIO("a/b/c.wav\nid10001/00001.wav\n"))


def test_load_utterances_duplicate_path():
    with pytest.raises(DuplicateKeyError, match="a/b/c.wav"):
        load_utterances(io.StringIO("a/b/c.wav\na/b/c.wav\n"))


def test_build_corpus_joins_and_indexes():
    speakers = [Speaker("a", "m", "usa"), Speaker("b", "f", "uk")]
    utts = [
        Utterance("a/r1/1.wav", "a", "r1", "a/r1/1.wav"),
        Utterance("a/r1/2.wav", "a", "r1", "a/r1/2.wav"),
        Utterance("a/r2/3.wav", "a", "r2", "a/r2/3.wav"),
        Utterance("b/r1/1.wav", "b", "r1", "b/r1/1.wav"),
        Utterance("b/r1/2.wav", "b", "r1", "b/r1/2.wav"),
        Utterance("b/r2/3.wav", "b", "r2", "b/r2/3.wav"),
    ]
    corpus = build_corpus(speakers, utts)
    assert set(corpus.speakers) == {"a", "b"}
    assert len(corpus.utterances) == 6
    assert corpus.group_index == {("male", "usa"): ["a"], ("female", "uk"): ["b"]}
    assert corpus.by_speaker["a"] == sorted(u.rel_path for u in utts[:3])
    assert corpus.recordings_of("a") == {
        "r1": ["a/r1/1.wav", "a/r1/2.wav"],
        "r2": ["a/r2/3.wav"],
    }


def test_build_corpus_drops_orphans():
    speakers = [Speaker("a", "m", "usa"), Speaker("ghost", "f", "uk")]
    utts = [
        Utterance("a/r1/1.wav", "a", "r1", "a/r1/1.wav"),
        Utterance("id99999/r1/1.wav", "id99999", "r1", "id99999/r1/1.wav"),
    ]
    corpus = build_corpus(speakers, utts)
    assert set(corpus.speakers) == {"a"}
    assert set(corpus.utterances) == {"a/r1/1.wav"}
    assert corpus.dropped_utterance_count == 1
    assert corpus.dropped_speaker_count == 1


def test_build_corpus_empty_is_fatal():
    with pytest.raises(CorpusError):
        build_corpus([Speaker("a", "m", "usa")], [])


def test_group_index_excludes_ungroupable():
    speakers = [Speaker("a", "x", "usa"), Speaker("b", "m", "usa")]
    utts = [
        Utterance("a/r1/1.wav", "a", "r1", "a/r1/1.wav"),
        Utterance("b/r1/1.wav", "b", "r1", "b/r1/1.wav"),
    ]
    corpus = build_corpus(speakers, utts)
    assert set(corpus.speakers) == {"a", "b"}
    assert corpus.group_index == {("male", "usa"): ["b"]}


def test_group_index_partitions_valid_speakers():
    corpus = make_corpus([("m", "usa", 3), ("f", "usa", 2), ("f", "uk", 4)])
    seen: list[str] = []
    for sids in corpus.group_index.values():
        seen.extend(sids)
    groupable = [s for s in corpus.speakers if corpus.speakers[s].group is not None]
    assert sorted(seen) == sorted(groupable)
    assert len(seen) == len(set(seen))


def test_round_trip(tmp_path):
    corpus = make_corpus([("m", "usa", 2), ("f", "uk", 2)], recordings=2, utts_per_rec=2)
    meta = tmp_path / "meta.csv"
    utts = tmp_path / "utts.txt"
    write_metadata(corpus, meta)
    write_utterances(corpus, utts)
    reloaded = build_corpus(load_metadata(meta), load_utterances(utts))
    assert set(reloaded.speakers) == set(corpus.speakers)
    assert set(reloaded.utterances) == set(corpus.utterances)
    assert reloaded.group_index == corpus.group_index
    # serialization is stable byte for byte
    meta2 = tmp_path / "meta2.csv"
    utts2 = tmp_path / "utts2.txt"
    write_metadata(reloaded, meta2)
    write_utterances(reloaded, utts2)
    assert meta.read_bytes() == meta2.read_bytes()
    assert utts.read_bytes() == utts2.read_bytes()


def test_group_label():
    assert group_label(("male", "usa")) == "male:usa"


# --- corpus_stats ----------------------------------------------------------


def _stats_corpus() -> Corpus:
    """One speaker with recordings r1:[u1,u2], r2:[u3]; one lone-pair peer."""
    speakers = [Speaker("a", "m", "usa"), Speaker("b", "f", "uk")]
    utts = []
    for path in ("a/r1/1.wav", "a/r1/2.wav", "a/r2/3.wav", "b/r1/1.wav", "b/r2/2.wav"):
        sid, rec, _ = path.split("/")
        utts.append(Utterance(path, sid, rec, path))
    return build_corpus(speakers, utts)


def test_corpus_stats_trial_list_hand_count():
    """4 same pairs, 1 of them within-recording: 25.0% trivial."""
    corpus = _stats_corpus()
    pairs = [
        ("a/r1/1.wav", "a/r1/2.wav"),  # within-recording, trivial
        ("a/r1/1.wav", "a/r2/3.wav"),
        ("a/r1/2.wav", "a/r2/3.wav"),
        ("b/r1/1.wav", "b/r2/2.wav"),
    ]
    rows = corpus_stats(corpus, pairs)
    by_nat = {r.nationality: r for r in rows}
    assert by_nat["usa"].same_pairs == 3
    assert by_nat["usa"].pct_trivial == pytest.approx(100.0 / 3.0)
    assert by_nat["uk"].same_pairs == 1
    total = sum(r.same_pairs for r in rows)
    trivial = sum(r.same_pairs * r.pct_trivial / 100.0 for r in rows)
    assert total == 4
    assert trivial == pytest.approx(1.0)
    assert 100.0 * trivial / total == pytest.approx(25.0)


def test_corpus_stats_single_speaker_25pct():
    """The hand-built single-speaker example: 4 same pairs, 1 trivial."""
    speakers = [Speaker("a", "m", "usa")]
    utts = []
    for path in ("a/r1/1.wav", "a/r1/2.wav", "a/r2/3.wav", "a/r3/4.wav"):
        sid, rec, _ = path.split("/")
        utts.append(Utterance(path, sid, rec, path))
    corpus = build_corpus(speakers, utts)
    pairs = [
        ("a/r1/1.wav", "a/r1/2.wav"),
        ("a/r1/1.wav", "a/r2/3.wav"),
        ("a/r1/2.wav", "a/r3/4.wav"),
        ("a/r2/3.wav", "a/r3/4.wav"),
    ]
    rows = corpus_stats(corpus, pairs)
    assert len(rows) == 1
    row = rows[0]
    assert row.speakers == 1
    assert row.same_pairs == 4
    assert row.pairs_per_speaker == pytest.approx(4.0)
    assert row.pct_trivial == pytest.approx(25.0)


def test_corpus_stats_whole_corpus_mode():
    corpus = _stats_corpus()
    rows = corpus_stats(corpus)
    by_nat = {r.nationality: r for r in rows}
    # speaker a: C(3,2)=3 pairs, 1 within-recording
    assert by_nat["usa"].same_pairs == 3
    assert by_nat["usa"].pct_trivial == pytest.approx(100.0 / 3.0)
    # speaker b: 1 cross-recording pair
    assert by_nat["uk"].same_pairs == 1
    assert by_nat["uk"].pct_trivial == 0.0


def test_corpus_stats_pairs_per_speaker_consistency():
    corpus = make_corpus([("m", "usa", 3), ("f", "uk", 2)], recordings=3, utts_per_rec=2)
    for row in corpus_stats(corpus):
        assert row.pairs_per_speaker == pytest.approx(row.same_pairs / row.speakers)


def test_corpus_stats_empty_trial_list():
    assert corpus_stats(_stats_corpus(), []) == []


def test_corpus_stats_unresolvable_path():
    with pytest.raises(CorpusError, match="nope/r1/1.wav"):
        corpus_stats(_stats_corpus(), [("nope/r1/1.wav", "a/r1/1.wav")])
