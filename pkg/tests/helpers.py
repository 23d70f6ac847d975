"""Shared test fixtures: synthetic corpora and a hard scorer configuration.

The hard configuration was tuned so that evaluation error rates on these
corpora land well inside (0, 1); the library default separates speakers
almost perfectly, which makes trend comparisons degenerate.
"""

from __future__ import annotations

from pathlib import Path

from fairtrial.corpus import Corpus, Speaker, Utterance, build_corpus, write_metadata, write_utterances
from fairtrial.scoring import SimConfig

# Tuned: small embedding, strong channel effect, heavy utterance noise.
HARD_SIM_KWARGS = dict(embedding_dim=16, channel_scale=0.6, noise_scale=1.0)


def hard_sim(seed: int = 0) -> SimConfig:
    return SimConfig(seed=seed, **HARD_SIM_KWARGS)


def make_corpus(
    groups: list[tuple[str, str, int]],
    recordings: int = 5,
    utts_per_rec: int = 4,
    start_index: int = 0,
) -> Corpus:
    """Build a corpus of (gender, nationality, speaker_count) groups with a
    regular recording layout. Speaker ids are s000, s001, ... in order."""
    speakers: list[Speaker] = []
    utterances: list[Utterance] = []
    idx = start_index
    for gender, nationality, count in groups:
        for _ in range(count):
            sid = f"s{idx:03d}"
            idx += 1
            speakers.append(Speaker(sid, gender, nationality))
            for r in range(recordings):
                rec = f"{sid}_r{r}"
                for u in range(utts_per_rec):
                    path = f"{sid}/{rec}/{u:03d}.wav"
                    utterances.append(Utterance(path, sid, rec, path))
    return build_corpus(speakers, utterances)


def corpus_files(corpus: Corpus, directory: Path) -> tuple[str, str]:
    """Serialize a corpus for CLI consumption; returns (meta, utts) paths."""
    meta = directory / "meta.csv"
    utts = directory / "utts.txt"
    write_metadata(corpus, meta)
    write_utterances(corpus, utts)
    return str(meta), str(utts)
