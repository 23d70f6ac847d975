"""Score sets, score file I/O, and the synthetic similarity oracle."""

from __future__ import annotations

import io
import math

import numpy as np
import pytest

from fairtrial.errors import CorpusError, FormatError, ScoreError
from fairtrial.grading import PairLabel
from fairtrial.scoring import ScoreSet, SimConfig, load_scores, simulate_scores, write_scores
from fairtrial.trialgen import GenerationConfig, generate

from helpers import HARD_SIM_KWARGS, hard_sim, make_corpus


# --- ScoreSet --------------------------------------------------------------


def test_scoreset_is_unordered():
    scores = ScoreSet()
    scores.add("a", "b", 0.5)
    assert scores.lookup("b", "a") == 0.5
    assert ("b", "a") in scores
    assert len(scores) == 1


def test_scoreset_conflict_and_idempotence():
    scores = ScoreSet()
    scores.add("a", "b", 0.5)
    scores.add("b", "a", 0.5)  # same value, other orientation: fine
    assert len(scores) == 1
    with pytest.raises(ScoreError):
        scores.add("a", "b", 0.6)


def test_scoreset_rejects_non_finite():
    scores = ScoreSet()
    with pytest.raises(ScoreError):
        scores.add("a", "b", float("nan"))
    with pytest.raises(ScoreError):
        scores.add("a", "b", float("inf"))


def test_scoreset_missing_lookup():
    with pytest.raises(ScoreError):
        ScoreSet().lookup("a", "b")


# --- file I/O --------------------------------------------------------------


def test_score_file_round_trip(tmp_path):
    scores = ScoreSet()
    scores.add("a/r/1.wav", "b/r/1.wav", 0.123456789)
    scores.add("a/r/1.wav", "c/r/1.wav", -0.5)
    path = tmp_path / "scores.txt"
    write_scores(scores, path)
    text = path.read_text()
    assert "0.123457" in text  # six decimal places
    reloaded = load_scores(path)
    assert reloaded.lookup("a/r/1.wav", "b/r/1.wav") == pytest.approx(0.123457)
    assert reloaded.lookup("a/r/1.wav", "c/r/1.wav") == pytest.approx(-0.5)


def test_load_scores_field_count():
    with pytest.raises(FormatError, match="line 1"):
        load_scores(io.StringIO("a b\n"))


def test_load_scores_bad_float():
    with pytest.raises(FormatError, match="line 2"):
        load_scores(io.StringIO("a b 0.5\na c x.y\n"))


def test_load_scores_non_finite():
    with pytest.raises(FormatError, match="line 1"):
        load_scores(io.StringIO("a b nan\n"))


# --- SimConfig -------------------------------------------------------------


def test_sim_config_defaults():
    config = SimConfig()
    assert config.embedding_dim == 64
    assert config.speaker_scale == 1.0
    assert config.channel_scale == 0.35
    assert config.noise_scale == 0.25


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(embedding_dim=1)
    with pytest.raises(ValueError):
        SimConfig(speaker_scale=-0.1)
    with pytest.raises(ValueError):
        SimConfig(speaker_scale=0.0, channel_scale=0.0, noise_scale=0.0)
    with pytest.raises(ValueError):
        SimConfig(seed=-1)


# --- simulate_scores -------------------------------------------------------


def _small_corpus():
    return make_corpus([("m", "usa", 4)], recordings=3, utts_per_rec=2)


def test_simulate_deterministic_and_bounded():
    corpus = _small_corpus()
    trial_list = generate(corpus, GenerationConfig(n=3, seed=1))
    config = SimConfig(seed=5)
    a = simulate_scores(corpus, trial_list.id_pairs(), config)
    b = simulate_scores(corpus, trial_list.id_pairs(), config)
    assert dict(a.items()) == dict(b.items())
    for _, value in a.items():
        assert -1.0 <= value <= 1.0


def test_simulate_score_depends_only_on_pair():
    """A pair's score is the same whether scored alone or in a batch."""
    corpus = _small_corpus()
    trial_list = generate(corpus, GenerationConfig(n=3, seed=1))
    config = SimConfig(seed=5)
    batch = simulate_scores(corpus, trial_list.id_pairs(), config)
    first = trial_list.id_pairs()[0]
    alone = simulate_scores(corpus, [first], config)
    assert alone.lookup(*first) == batch.lookup(*first)


def test_simulate_self_pair_is_exactly_one():
    corpus = _small_corpus()
    utt = next(iter(corpus.utterances))
    scores = simulate_scores(corpus, [(utt, utt)], SimConfig(seed=3))
    assert scores.lookup(utt, utt) == 1.0


def test_simulate_seed_changes_scores():
    corpus = _small_corpus()
    trial_list = generate(corpus, GenerationConfig(n=3, seed=1))
    a = simulate_scores(corpus, trial_list.id_pairs(), SimConfig(seed=1))
    b = simulate_scores(corpus, trial_list.id_pairs(), SimConfig(seed=2))
    assert dict(a.items()) != dict(b.items())


def test_simulate_unknown_utterance():
    corpus = _small_corpus()
    utt = next(iter(corpus.utterances))
    with pytest.raises(CorpusError):
        simulate_scores(corpus, [(utt, "nope/r/1.wav")], SimConfig())


def test_separation_gate_default_config():
    """Mean same-speaker score beats mean different-speaker score by >= 0.2
    with the default configuration on a 50-speaker corpus."""
    corpus = make_corpus([("m", "usa", 25), ("f", "usa", 25)])
    trial_list = generate(corpus, GenerationConfig(n=20, seed=0))
    scores = simulate_scores(corpus, trial_list.id_pairs(), SimConfig(seed=0))
    same = [scores.lookup(p.enroll, p.test) for p in trial_list.pairs if p.label]
    diff = [scores.lookup(p.enroll, p.test) for p in trial_list.pairs if not p.label]
    margin = float(np.mean(same)) - float(np.mean(diff))
    assert margin >= 0.2


def test_oracle_orders_same_above_different_every_seed():
    """The defining property holds for 10 of 10 oracle seeds, including the
    hard configuration the trend tests rely on."""
    corpus = make_corpus([("m", "usa", 10)], recordings=4, utts_per_rec=3)
    trial_list = generate(corpus, GenerationConfig(n=10, seed=0))
    for seed in range(10):
        for config in (SimConfig(seed=seed), hard_sim(seed)):
            scores = simulate_scores(corpus, trial_list.id_pairs(), config)
            same = [scores.lookup(p.enroll, p.test) for p in trial_list.pairs if p.label]
            diff = [scores.lookup(p.enroll, p.test) for p in trial_list.pairs if not p.label]
            assert np.mean(same) > np.mean(diff)


def test_oracle_channel_effect():
    """Within-recording same pairs score higher on average than
    cross-recording ones whenever the channel carries weight."""
    corpus = make_corpus([("m", "usa", 8)], recordings=3, utts_per_rec=3)
    within, across = [], []
    for sid in corpus.speakers:
        utts = corpus.by_speaker[sid]
        rec_of = {u: corpus.utterances[u].recording_id for u in utts}
        for i, a in enumerate(utts):
            for b in utts[i + 1:]:
                (within if rec_of[a] == rec_of[b] else across).append((a, b))
    config = hard_sim(0)
    scores = simulate_scores(corpus, within + across, config)
    mean_within = np.mean([scores.lookup(*p) for p in within])
    mean_across = np.mean([scores.lookup(*p) for p in across])
    assert mean_within > mean_across


def test_hard_config_is_hard_but_still_ordered():
    """The tuned hard configuration keeps error rates off the floor."""
    corpus = make_corpus([("m", "usa", 20)], recordings=4, utts_per_rec=3)
    trial_list = generate(corpus, GenerationConfig(n=15, seed=2))
    scores = simulate_scores(corpus, trial_list.id_pairs(), hard_sim(1))
    same = sorted(scores.lookup(p.enroll, p.test) for p in trial_list.pairs if p.label)
    diff = sorted(scores.lookup(p.enroll, p.test) for p in trial_list.pairs if not p.label)
    # distributions overlap: the best impostor beats the worst genuine trial
    assert diff[-1] > same[0]
    assert np.mean(same) > np.mean(diff)
