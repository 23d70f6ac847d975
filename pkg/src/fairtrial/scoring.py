"""Similarity scores for trial pairs: external score files and a synthetic
embedding oracle.

Scores are similarities (higher means more likely same speaker); callers
with distance-like scores must negate them before loading. The oracle makes
the pipeline testable without audio: each utterance vector is the sum of a
unit speaker latent, a recording (channel) perturbation and utterance noise,
every component drawn from a stream seeded by the entity's id, and a pair's
score is the cosine of its two utterance vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np

from .corpus import Corpus
from .errors import FormatError, ScoreError
from .ioutil import TextSource, open_text, open_write
from .seeding import mix_seed

SOURCE_EXTERNAL = "external_file"
SOURCE_SIMULATED = "simulated"


class ScoreSet:
    """Map from unordered utterance-path pairs to finite similarity scores."""

    def __init__(self, source: str = SOURCE_EXTERNAL):
        self.source = source
        self._scores: dict[tuple[str, str], float] = {}

    @staticmethod
    def key(a: str, b: str) -> tuple[str, str]:
        return (a, b) if a <= b else (b, a)

    def add(self, a: str, b: str, score: float) -> None:
        if not math.isfinite(score):
            raise ScoreError(f"non-finite score for pair ('{a}', '{b}')")
        key = self.key(a, b)
        existing = self._scores.get(key)
        if existing is not None and existing != score:
            raise ScoreError(
                f"conflicting scores for pair {key}: {existing} vs {score}"
            )
        self._scores[key] = score

    def lookup(self, a: str, b: str) -> float:
        try:
            return self._scores[self.key(a, b)]
        except KeyError:
            raise ScoreError(f"no score for pair ('{a}', '{b}')") from None

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return self.key(*pair) in self._scores

    def __len__(self) -> int:
        return len(self._scores)

    def items(self) -> Iterator[tuple[tuple[str, str], float]]:
        return iter(sorted(self._scores.items()))


def load_scores(source: TextSource) -> ScoreSet:
    """Read `<enroll> <test> <score>` lines into a ScoreSet.

    Re-listing a pair with the same score is accepted; a different score for
    an already-seen pair is a conflict.

    Raises:
        FormatError: wrong field count or non-numeric score (with line number).
        ScoreError: conflicting duplicate.
    """
    scores = ScoreSet(SOURCE_EXTERNAL)
    with open_text(source) as f:
        for lineno, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 3:
                raise FormatError(f"line {lineno}: expected 3 fields, got {len(fields)}")
            try:
                value = float(fields[2])
            except ValueError:
                raise FormatError(
                    f"line {lineno}: non-numeric score '{fields[2]}'"
                ) from None
            if not math.isfinite(value):
                raise FormatError(f"line {lineno}: non-finite score '{fields[2]}'")
            scores.add(fields[0], fields[1], value)
    return scores


def write_scores(scores: ScoreSet, dest: TextSource) -> None:
    """Write scores as `<enroll> <test> <score>` with 6 decimal places."""
    with open_write(dest) as f:
        for (a, b), value in scores.items():
            f.write(f"{a} {b} {value:.6f}\n")


@dataclass(frozen=True)
class SimConfig:
    """Synthetic scorer parameters.

    The scales weight the three components of an utterance vector; setting
    channel_scale and noise_scale to zero makes every same-speaker pair score
    exactly 1. Defaults keep same/different distributions well separated.
    """

    embedding_dim: int = 64
    speaker_scale: float = 1.0
    channel_scale: float = 0.35
    noise_scale: float = 0.25
    seed: int = 0

    def __post_init__(self) -> None:
        if self.embedding_dim < 2:
            raise ValueError("embedding_dim must be >= 2")
        for name in ("speaker_scale", "channel_scale", "noise_scale"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.speaker_scale + self.channel_scale + self.noise_scale == 0:
            raise ValueError("at least one scale must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def to_json_dict(self) -> dict:
        return {
            "embedding_dim": self.embedding_dim,
            "speaker_scale": self.speaker_scale,
            "channel_scale": self.channel_scale,
            "noise_scale": self.noise_scale,
            "seed": self.seed,
        }


def _unit_vector(seed: int, dim: int) -> np.ndarray:
    v = np.random.default_rng(seed).standard_normal(dim)
    return v / np.linalg.norm(v)


def simulate_scores(
    corpus: Corpus, pairs: Iterable[tuple[str, str]], config: Optional[SimConfig] = None
) -> ScoreSet:
    """Score (enroll, test) path pairs with the synthetic oracle.

    Deterministic in (corpus, pairs-as-set, config); symmetric in pair
    orientation. A pair of an utterance with itself scores exactly 1.

    Raises:
        CorpusError: a path does not resolve in the corpus.
    """
    config = config or SimConfig()
    pair_list = [ScoreSet.key(a, b) for a, b in pairs]

    used = sorted({u for pair in pair_list for u in pair})
    for u in used:
        corpus.resolve(u)

    dim = config.embedding_dim
    speaker_vec: dict[str, np.ndarray] = {}
    recording_vec: dict[str, np.ndarray] = {}
    vectors = np.empty((len(used), dim))
    for i, utt_id in enumerate(used):
        utt = corpus.utterances[utt_id]
        s = speaker_vec.get(utt.speaker_id)
        if s is None:
            s = _unit_vector(mix_seed(config.seed, "speaker", utt.speaker_id), dim)
            speaker_vec[utt.speaker_id] = s
        c = recording_vec.get(utt.recording_id)
        if c is None:
            c = _unit_vector(mix_seed(config.seed, "recording", utt.recording_id), dim)
            recording_vec[utt.recording_id] = c
        e = _unit_vector(mix_seed(config.seed, "utterance", utt_id), dim)
        vectors[i] = (
            config.speaker_scale * s + config.channel_scale * c + config.noise_scale * e
        )

    index = {u: i for i, u in enumerate(used)}
    norms = np.linalg.norm(vectors, axis=1)
    ia = np.fromiter((index[a] for a, _ in pair_list), dtype=np.intp, count=len(pair_list))
    ib = np.fromiter((index[b] for _, b in pair_list), dtype=np.intp, count=len(pair_list))
    cosines = np.einsum("ij,ij->i", vectors[ia], vectors[ib]) / (norms[ia] * norms[ib])
    np.clip(cosines, -1.0, 1.0, out=cosines)

    scores = ScoreSet(SOURCE_SIMULATED)
    for (a, b), value in zip(pair_list, cosines):
        scores.add(a, b, 1.0 if a == b else float(value))
    return scores
