"""Inclusive trial-list generation.

For every eligible speaker the generator draws exactly n same-speaker pairs
(cross-recording only, i.e. medium difficulty) and n distinct
different-speaker pairs against the pooled utterances of the speaker's
(gender, nationality) group (hard difficulty). Each speaker's draws come
from an independent stream derived from (seed, speaker_id), so output is a
pure function of (corpus, config) regardless of parallelism or iteration
order.
"""

from __future__ import annotations

import os
import random
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from .corpus import Corpus
from .errors import CorpusError, FormatError, GenerationError
from .grading import Grade, PairLabel, grade_pair
from .ioutil import TextSource, open_text, open_write
from .seeding import mix_seed

GROUP_POLICY_SAME_GENDER_AND_NATIONALITY = "same_gender_and_nationality"

SAME_PAIR_GRADE = Grade.MEDIUM
DIFFERENT_PAIR_GRADE = Grade.HARD

# Rejection-sampling budget for distinct different-speaker pairs, per speaker.
ATTEMPT_CAP_FACTOR = 100

# Exclusion reasons recorded by eligible_speakers / generate.
REASON_UNKNOWN_GENDER = "unknown-gender"
REASON_INVALID_NATIONALITY = "invalid-nationality"
REASON_NO_GROUP_PARTNERS = "no-group-partners"
REASON_INSUFFICIENT_SAME_PAIRS = "insufficient-same-pairs"
REASON_INSUFFICIENT_DIFF_PAIRS = "insufficient-diff-pairs"
REASON_PAIR_EXHAUSTION = "pair-exhaustion"


@dataclass(frozen=True)
class GenerationConfig:
    """Parameters of one generation run.

    n is the count of same-speaker pairs per speaker, which equals the count
    of different-speaker pairs per speaker (2n trials per speaker in total).
    The default follows the guideline of at least 500 different-speaker
    pairs per speaker.
    """

    n: int = 500
    seed: int = 0
    group_policy: str = GROUP_POLICY_SAME_GENDER_AND_NATIONALITY

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.group_policy != GROUP_POLICY_SAME_GENDER_AND_NATIONALITY:
            raise ValueError(f"unknown group policy '{self.group_policy}'")

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "group_policy": self.group_policy,
            "same_pair_grade": SAME_PAIR_GRADE.key,
            "different_pair_grade": DIFFERENT_PAIR_GRADE.key,
        }


@dataclass(frozen=True)
class TrialPair:
    """One (enroll, test) comparison; utterances are referenced by rel_path."""

    enroll: str
    test: str
    label: PairLabel
    grade: Grade

    def key(self) -> tuple[str, str]:
        """Orientation-independent identity of the pair."""
        if self.enroll <= self.test:
            return (self.enroll, self.test)
        return (self.test, self.enroll)


@dataclass
class TrialList:
    """A generated evaluation dataset plus its provenance."""

    pairs: list[TrialPair]
    config: GenerationConfig
    included_speakers: list[str]
    excluded_speakers: list[tuple[str, str]]  # (speaker_id, reason)

    def __len__(self) -> int:
        return len(self.pairs)

    def id_pairs(self) -> list[tuple[str, str]]:
        return [(p.enroll, p.test) for p in self.pairs]

    def grade_counts(self) -> Counter:
        return Counter((p.label, p.grade) for p in self.pairs)

    def to_manifest_dict(self) -> dict:
        counts: dict[str, dict[str, int]] = {}
        for (label, grade), count in sorted(self.grade_counts().items()):
            counts.setdefault(label.key, {})[grade.key] = count
        return {
            "config": self.config.to_json_dict(),
            "included_speakers": list(self.included_speakers),
            "excluded_speakers": [list(item) for item in self.excluded_speakers],
            "grade_histogram": {"total": len(self.pairs), "counts": counts},
        }


def thread_count(requested: Optional[int] = None) -> int:
    """Resolve the worker count; FAIRTRIAL_THREADS provides the default and
    caps explicit requests (0 means one worker per CPU)."""
    auto = os.cpu_count() or 1
    env = os.environ.get("FAIRTRIAL_THREADS")
    cap = None
    if env is not None:
        cap = int(env)
        cap = auto if cap == 0 else max(1, cap)
    if requested is None:
        return cap if cap is not None else 1
    requested = auto if requested == 0 else max(1, requested)
    return min(requested, cap) if cap is not None else requested


def count_same_speaker_pairs(corpus: Corpus, speaker_id: str) -> int:
    """Number of distinct cross-recording same-speaker pairs, without
    materializing them."""
    utts = corpus.by_speaker.get(speaker_id, [])
    k = len(utts)
    total = k * (k - 1) // 2
    within = sum(
        len(u) * (len(u) - 1) // 2 for u in corpus.recordings_of(speaker_id).values()
    )
    return total - within


def enumerate_same_speaker_pairs(corpus: Corpus, speaker_id: str) -> list[TrialPair]:
    """All cross-recording utterance pairs of one speaker, graded medium,
    in deterministic order (sorted by the rel_path pair)."""
    if speaker_id not in corpus.speakers:
        raise CorpusError(f"speaker '{speaker_id}' not found in corpus")
    utts = corpus.by_speaker[speaker_id]
    recording = {u: corpus.utterances[u].recording_id for u in utts}
    pairs = []
    for i, a in enumerate(utts):
        for b in utts[i + 1 :]:
            if recording[a] != recording[b]:
                pairs.append(TrialPair(a, b, PairLabel.SAME, SAME_PAIR_GRADE))
    return pairs


def _partner_pool(corpus: Corpus, speaker_id: str) -> list[str]:
    """Pooled utterances of all other speakers in this speaker's group."""
    group = corpus.group_of(speaker_id)
    if group is None:
        return []
    pool: list[str] = []
    for sid in corpus.group_index[group]:
        if sid != speaker_id:
            pool.extend(corpus.by_speaker[sid])
    return pool


def eligible_speakers(
    corpus: Corpus,
    config: GenerationConfig,
    speakers: Optional[Sequence[str]] = None,
) -> tuple[list[str], list[tuple[str, str]]]:
    """Split speakers into included and (speaker, reason) exclusions.

    A speaker is included when it has at least n cross-recording same-speaker
    pairs and strictly more than n candidate different-speaker pairs against
    its group partners. Reasons are checked in order: groupability, group
    partners, same pairs, different pairs. Eligibility never depends on the
    seed. When speakers is given, only those are considered for inclusion;
    partner pools still span the whole corpus.

    Raises:
        CorpusError: a requested speaker is not in the corpus.
    """
    if speakers is None:
        candidates = sorted(corpus.speakers)
    else:
        missing = [s for s in speakers if s not in corpus.speakers]
        if missing:
            raise CorpusError(f"unknown speaker(s): {', '.join(sorted(missing))}")
        candidates = sorted(set(speakers))
    included: list[str] = []
    excluded: list[tuple[str, str]] = []
    for sid in candidates:
        speaker = corpus.speakers[sid]
        group = speaker.group
        if group is None:
            reason = (
                REASON_UNKNOWN_GENDER
                if speaker.gender == "unknown"
                else REASON_INVALID_NATIONALITY
            )
            excluded.append((sid, reason))
            continue
        partners = [p for p in corpus.group_index[group] if p != sid]
        if not partners:
            excluded.append((sid, REASON_NO_GROUP_PARTNERS))
            continue
        if count_same_speaker_pairs(corpus, sid) < config.n:
            excluded.append((sid, REASON_INSUFFICIENT_SAME_PAIRS))
            continue
        pool_size = sum(len(corpus.by_speaker[p]) for p in partners)
        if len(corpus.by_speaker[sid]) * pool_size <= config.n:
            excluded.append((sid, REASON_INSUFFICIENT_DIFF_PAIRS))
            continue
        included.append(sid)
    return included, excluded


def _speaker_block(
    corpus: Corpus, config: GenerationConfig, speaker_id: str
) -> tuple[list[TrialPair], Optional[str]]:
    """Build one speaker's 2n trials, or report why it must be excluded."""
    n = config.n
    rng = random.Random(mix_seed(config.seed, speaker_id))

    same_pool = enumerate_same_speaker_pairs(corpus, speaker_id)
    same_sel = rng.sample(same_pool, n)

    own = corpus.by_speaker[speaker_id]
    pool = _partner_pool(corpus, speaker_id)
    diff_sel: list[TrialPair] = []
    seen: set[tuple[str, str]] = set()
    attempts = 0
    cap = ATTEMPT_CAP_FACTOR * n
    while len(diff_sel) < n:
        attempts += 1
        if attempts > cap:
            return [], REASON_PAIR_EXHAUSTION
        enroll = own[rng.randrange(len(own))]
        test = pool[rng.randrange(len(pool))]
        key = (enroll, test)
        if key in seen:
            continue
        seen.add(key)
        diff_sel.append(TrialPair(enroll, test, PairLabel.DIFFERENT, DIFFERENT_PAIR_GRADE))
    return same_sel + diff_sel, None


def generate(
    corpus: Corpus,
    config: GenerationConfig,
    threads: Optional[int] = None,
    speakers: Optional[Sequence[str]] = None,
) -> TrialList:
    """Generate the evaluation dataset: per included speaker, n same-speaker
    pairs drawn without replacement from its cross-recording pairs, then n
    distinct different-speaker pairs (enroll from the speaker, with
    replacement; test from the pooled group partners), duplicates rejected
    and redrawn. Speaker blocks are concatenated in sorted speaker order.
    When speakers is given, blocks are built only for those speakers.

    Raises:
        GenerationError: no speaker is eligible.
    """
    included, excluded = eligible_speakers(corpus, config, speakers=speakers)
    if not included:
        raise GenerationError(
            f"no eligible speakers for n={config.n} "
            f"({len(excluded)} excluded)"
        )

    workers = thread_count(threads)
    build = lambda sid: _speaker_block(corpus, config, sid)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(build, included))
    else:
        blocks = [build(sid) for sid in included]

    pairs: list[TrialPair] = []
    survivors: list[str] = []
    for sid, (block, reason) in zip(included, blocks):
        if reason is not None:
            excluded.append((sid, reason))
            continue
        survivors.append(sid)
        pairs.extend(block)
    if not survivors:
        raise GenerationError(f"no eligible speakers for n={config.n} (all exhausted)")

    return TrialList(
        pairs=pairs,
        config=config,
        included_speakers=survivors,
        excluded_speakers=excluded,
    )


def generate_variants(
    corpus: Corpus,
    config: GenerationConfig,
    seeds: Sequence[int],
    threads: Optional[int] = None,
) -> list[TrialList]:
    """One TrialList per seed with otherwise identical configuration.

    Raises:
        ValueError: seeds empty or repeated.
    """
    if not seeds:
        raise ValueError("seeds must be non-empty")
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    return [generate(corpus, replace(config, seed=s), threads=threads) for s in seeds]


class TrialRow(NamedTuple):
    """One raw line of a trial file, before corpus resolution."""

    label: int
    enroll: str
    test: str


def read_trial_file(source: TextSource) -> list[TrialRow]:
    """Read `<label> <enroll> <test>` lines; any whitespace separates fields,
    blank lines are ignored, labels must be 0 or 1."""
    rows: list[TrialRow] = []
    with open_text(source) as f:
        for lineno, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != 3:
                raise FormatError(
                    f"line {lineno}: expected 3 fields, got {len(fields)}"
                )
            if fields[0] not in ("0", "1"):
                raise FormatError(
                    f"line {lineno}: label must be 0 or 1, got '{fields[0]}'"
                )
            rows.append(TrialRow(int(fields[0]), fields[1], fields[2]))
    return rows


def write_trial_file(
    trials: Union[TrialList, Iterable[TrialPair], Iterable[TrialRow]],
    dest: TextSource,
) -> None:
    """Write trials as `<label> <enroll> <test>`, one per line."""
    pairs = trials.pairs if isinstance(trials, TrialList) else trials
    with open_write(dest) as f:
        for p in pairs:
            f.write(f"{int(p.label)} {p.enroll} {p.test}\n")


def resolve_trials(corpus: Corpus, rows: Iterable[TrialRow]) -> list[TrialPair]:
    """Resolve raw file rows against a corpus, grading every pair.

    Raises:
        CorpusError: a path does not resolve, or a file label contradicts
            the corpus metadata.
        GradingError: a pair the schema defines no category for.
    """
    pairs: list[TrialPair] = []
    for row in rows:
        label, grade = grade_pair(corpus, row.enroll, row.test)
        if int(label) != row.label:
            raise CorpusError(
                f"label {row.label} for pair ('{row.enroll}', '{row.test}') "
                f"contradicts corpus metadata (expected {int(label)})"
            )
        pairs.append(TrialPair(row.enroll, row.test, label, grade))
    return pairs
